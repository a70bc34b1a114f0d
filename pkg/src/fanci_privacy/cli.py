"""Command-line entry point: ``fanci-privacy <command> ...``.

Errors are reported as a single stderr line ``error: <category>: <message>``;
validation errors insert the specific kind after the category.
Exit codes: 2 usage, 3 input/output, 4 validation.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dataset as ds
from .domain import PublicSuffixList, default_psl, read_domain_lines
from .edit_distance import distance
from .errors import FanciError, InvalidDomainError
from .evaluation import (build_report, cross_matrix, feature_overlap, render_table,
                         top_fraction_analysis, transfer_records, write_records)
from .features import FEATURE_NAMES, extract_raw, normalize
from .preimage import analyze_features, render_big, spaces_report
from .reconstructor import (ModelConfig, build_model, load_checkpoint, reconstruct_many,
                            save_checkpoint, train)

EXIT_USAGE, EXIT_IO, EXIT_VALIDATION = 2, 3, 4

log = logging.getLogger("fanci_privacy")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- helpers -----------------------------------------------------------------------

def _psl(args) -> PublicSuffixList:
    return PublicSuffixList.load(args.psl) if args.psl else default_psl()


def _emit(args, doc: dict, text: str) -> None:
    """Write JSON to --out (if any); print JSON with --json-only, text otherwise."""
    if getattr(args, "out", None):
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=1)
    if args.json_only:
        print(json.dumps(doc, indent=1))
    else:
        print(text)


def _named_paths(items: list[str], flag: str) -> dict[str, str]:
    out = {}
    for item in items:
        name, sep, path = item.partition("=")
        if not sep or not name or not path:
            raise UsageError(f"{flag} expects NAME=PATH, got {item!r}")
        out[name] = path
    return out


def write_feature_csv(path: str | Path, domains: list[str], rows: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["domain", *FEATURE_NAMES])
        for d, row in zip(domains, rows):
            w.writerow([d, *(repr(float(v)) for v in row)])


def read_feature_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or list(header[1:]) != list(FEATURE_NAMES):
            raise ValueError(f"{path}: not a feature CSV (expected domain + {len(FEATURE_NAMES)} feature columns)")
        domains, rows = [], []
        for line_no, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise ValueError(f"{path}:{line_no}: expected {len(header)} fields, got {len(rec)}")
            domains.append(rec[0])
            rows.append([float(v) for v in rec[1:]])
    return domains, np.array(rows, dtype=np.float64).reshape(-1, len(FEATURE_NAMES))


def _is_feature_csv(path: str | Path) -> bool:
    with open(path, encoding="utf-8") as f:
        return f.readline().startswith("domain,")


def _extract_lines(path: str | Path, psl: PublicSuffixList) -> tuple[list[str], np.ndarray, int]:
    domains, rows, skipped = [], [], 0
    for line in read_domain_lines(path):
        try:
            rows.append(extract_raw(line, psl))
        except InvalidDomainError as e:
            log.warning("skipping line: %s", e)
            skipped += 1
            continue
        domains.append(line.lower())
    return domains, np.array(rows).reshape(-1, len(FEATURE_NAMES)), skipped


def _model_config(args, **extra) -> ModelConfig:
    overrides = {k: v for k, v in {
        "seed": args.seed, "focal_gamma": args.gamma, "max_epochs": args.max_epochs,
        "patience": args.patience, "batch_size": args.batch_size, "learning_rate": args.learning_rate,
        "state_width": args.state_width, "dtype": args.dtype,
        "max_seq_len": args.max_len,
    }.items() if v is not None}
    overrides.update(extra)
    return ModelConfig(**overrides)


# -- commands ----------------------------------------------------------------------

def cmd_extract(args) -> int:
    domains, rows, skipped = _extract_lines(args.domains, _psl(args))
    if not domains:
        raise ds.AllLinesInvalidError(f"{args.domains}: no valid domains")
    out = args.out or "-"
    if out == "-":
        w = csv.writer(sys.stdout)
        w.writerow(["domain", *FEATURE_NAMES])
        for d, row in zip(domains, rows):
            w.writerow([d, *(repr(float(v)) for v in row)])
    else:
        write_feature_csv(out, domains, rows)
        print(f"wrote {len(domains)} feature vectors to {out} ({skipped} lines skipped)", file=sys.stderr)
    return 0


def cmd_analyze(args) -> int:
    psl = _psl(args)
    doc: dict = {}
    lines = []
    if args.spaces:
        sp = spaces_report()
        doc["spaces"] = sp
        for key, label in (("domain_space", "|S|"), ("feature_space", "|F|"), ("reduction", "|S|/|F|")):
            m, e = sp[key]["scientific"]
            lines.append(f"{label:<8} {m} x 10^{e}")
    if args.input:
        if _is_feature_csv(args.input):
            domains, rows = read_feature_csv(args.input)
        else:
            domains, rows, _ = _extract_lines(args.input, psl)
        reports = []
        for d, row in zip(domains, rows):
            try:
                rep = analyze_features(row, psl, args.tol)
            except FanciError as e:
                reports.append({"domain": d, "error": e.kind, "message": str(e)})
                lines.append(f"{d}: {e.kind}")
                continue
            reports.append({"domain": d, **rep.to_dict()})
            lines.append(f"{d}: bound {render_big(rep.bound, 4)} (t_f {rep.t_f}, struct {rep.struct}, "
                         f"cont {rep.content}, partitions {len(rep.partitions)})")
        doc["preimages"] = reports
    if not doc:
        raise UsageError("give an input file and/or --spaces")
    _emit(args, doc, "\n".join(lines))
    return 0


def cmd_gen_synthetic(args) -> int:
    cfg = ds.SyntheticConfig.from_file(args.config) if args.config else ds.SyntheticConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.size is not None:
        cfg = replace(cfg, size=args.size)
    if args.name is not None:
        cfg = replace(cfg, name=args.name)
    s = ds.generate_synthetic_source(cfg, _psl(args))
    ds.write_domains(args.out, s.domains)
    print(f"wrote {len(s)} domains to {args.out}", file=sys.stderr)
    return 0


def cmd_prepare(args) -> int:
    benign = ds.load_domains(args.benign, args.name)
    others = [ds.load_domains(p) for p in args.others]
    dga = ds.load_dga_feed(args.dga) if args.dga else ds.DomainSet("dga", [])
    clean = ds.dedup_and_exclude(benign, others, dga)
    seed = args.seed if args.seed is not None else 0
    if args.k is not None:
        clean = ds.subsample(clean, args.k, seed)
    spec = ds.SplitSpec(args.test_fraction, args.validation_fraction, seed)
    parts = dict(zip(("train", "val", "test"), ds.split(clean, spec)))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ds.write_domains(out / f"{clean.name}.all.txt", clean.domains)
    for part, s in parts.items():
        ds.write_domains(out / f"{clean.name}.{part}.txt", s.domains)
    print(f"{clean.name}: {len(clean)} domains -> " +
          ", ".join(f"{p} {len(s)}" for p, s in parts.items()), file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    psl = _psl(args)
    tr = ds.load_domains(args.train)
    va = ds.load_domains(args.val)
    cfg = _model_config(args)
    x_tr = np.stack([normalize(extract_raw(d, psl)) for d in tr])
    x_va = np.stack([normalize(extract_raw(d, psl)) for d in va])
    model, hist = train(build_model(cfg), x_tr, tr.domains, x_va, va.domains, cfg)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, args.out, hist)
    doc = {"checkpoint": str(args.out), "parameters": model.num_parameters(), **hist.to_dict()}
    if args.history:
        with open(args.history, "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=1)
    text = (f"best epoch {hist.best_epoch} of {len(hist.val_loss)} ({hist.stop_reason}); "
            f"val loss {hist.val_loss[hist.best_epoch]:.5f}; saved {args.out}")
    print(json.dumps(doc, indent=1) if args.json_only else text)
    return 0


def cmd_reconstruct(args) -> int:
    model = load_checkpoint(args.checkpoint)
    if _is_feature_csv(args.input):
        domains, rows = read_feature_csv(args.input)
    else:
        domains, rows, _ = _extract_lines(args.input, _psl(args))
    rebuilt = reconstruct_many(model, np.stack([normalize(r) for r in rows]), args.max_len)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, delimiter="\t")
        w.writerow(["original", "reconstructed", "edits", "normalized"])
        for d, r in zip(domains, rebuilt):
            res = distance(d, r)
            w.writerow([d, r, res.edits, repr(res.normalized)])
    print(f"wrote {len(rebuilt)} reconstructions to {args.out}", file=sys.stderr)
    return 0


def cmd_evaluate(args) -> int:
    psl = _psl(args)
    ckpts = _named_paths(args.model, "--model")
    set_paths = _named_paths(args.set, "--set")
    if set(ckpts) != set(set_paths):
        raise UsageError("--model and --set must name the same sources")
    models = {n: load_checkpoint(p) for n, p in ckpts.items()}
    sets = {n: ds.load_domains(set_paths[n], n) for n in ckpts}
    matrix = cross_matrix(models, sets, psl, args.max_len)
    overlap = feature_overlap(sets, psl)
    breakdown = top_fraction_analysis(transfer_records(matrix), args.fraction, psl)
    report = build_report(matrix, overlap, breakdown)
    if args.records:
        write_records(args.records, matrix)
    _emit(args, report, render_table(report))
    return 0


def cmd_distance(args) -> int:
    res = distance(args.a, args.b)
    doc = {"a": args.a, "b": args.b, "edits": res.edits, "normalized": res.normalized}
    _emit(args, doc, f"edits {res.edits}\nnormalized {res.normalized}")
    return 0


def cmd_experiment(args) -> int:
    from .experiment import run_experiment

    cfg = _model_config(args)
    result = run_experiment(args.size, cfg.seed, args.fraction, cfg, psl=_psl(args))
    result.report["digest"] = result.digest()
    _emit(args, result.report, render_table(result.report) + f"\ndigest {result.report['digest']}")
    return 0


# -- parser ------------------------------------------------------------------------

def _add_model_flags(p):
    p.add_argument("--seed", type=int)
    p.add_argument("--gamma", type=float, help="focal loss exponent")
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--state-width", type=int)
    p.add_argument("--dtype", choices=("float64", "float32"))
    p.add_argument("--max-len", type=int, help="maximum token sequence length")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fanci-privacy", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(fn=fn)
        p.add_argument("--psl", help="public suffix list file (default: bundled copy)")
        p.add_argument("--json-only", action="store_true", help="print the JSON report instead of text")
        return p

    p = command("extract", cmd_extract, "domains file -> feature CSV")
    p.add_argument("domains")
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = command("analyze-preimages", cmd_analyze, "pre-image bounds and space sizes")
    p.add_argument("input", nargs="?", help="feature CSV or domains file")
    p.add_argument("--spaces", action="store_true", help="report domain and feature space sizes")
    p.add_argument("--tol", type=float, default=1e-6, help="entropy matching tolerance")
    p.add_argument("--out")

    p = command("gen-synthetic", cmd_gen_synthetic, "write a synthetic benign source")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--size", type=int)
    p.add_argument("--name")
    p.add_argument("--out", required=True)

    p = command("prepare", cmd_prepare, "dedup, exclude, subsample and split a source")
    p.add_argument("benign")
    p.add_argument("--others", nargs="*", default=[], help="other benign sources to exclude")
    p.add_argument("--dga", help="DGA feed CSV to exclude")
    p.add_argument("--name")
    p.add_argument("--k", type=int, help="subsample size")
    p.add_argument("--seed", type=int)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--validation-fraction", type=float, default=0.05)
    p.add_argument("--out", required=True, help="output directory")

    p = command("train", cmd_train, "train a reconstruction model")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--history", help="JSON path for the training history")
    _add_model_flags(p)

    p = command("reconstruct", cmd_reconstruct, "checkpoint + features -> reconstructions")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("input", help="feature CSV or domains file")
    p.add_argument("--max-len", type=int)
    p.add_argument("--out", required=True)

    p = command("evaluate", cmd_evaluate, "cross-source matrix, overlap and top-fraction report")
    p.add_argument("--model", action="append", required=True, metavar="NAME=CHECKPOINT")
    p.add_argument("--set", action="append", required=True, metavar="NAME=DOMAINS")
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--max-len", type=int)
    p.add_argument("--records", help="JSON path for per-record results")
    p.add_argument("--out")

    p = command("distance", cmd_distance, "edit distance between two strings")
    p.add_argument("a")
    p.add_argument("b")

    p = command("experiment", cmd_experiment, "desk-scale run on three synthetic sources")
    p.add_argument("--size", type=int, default=5000)
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--out")
    _add_model_flags(p)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: usage-error: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"error: usage-error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: io-error: {e}", file=sys.stderr)
        return EXIT_IO
    except FanciError as e:
        print(f"error: validation-error: {e.kind}: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as e:
        print(f"error: validation-error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
