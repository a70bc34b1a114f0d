"""Cross-source reconstruction matrix, feature-space overlap and top-fraction analysis."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dataset import DomainSet
from .domain import PublicSuffixList, default_psl, parse_domain
from .edit_distance import damerau_levenshtein
from .errors import EmptyRecordsError, InvalidDomainError
from .features import canonical_key, extract_raw, normalize
from .reconstructor import DecoderModel, reconstruct_many

CATEGORIES = ("reverse-lookup", "dns-service", "other")
DEFAULT_KEYWORDS = ("dnsbl", "spam", "rbl", "bl", "mx", "dkim")
REVERSE_ZONES = (("in-addr", "arpa"), ("ip6", "arpa"))

TABLE_COLUMNS = (
    "Training",
    "Evaluation",
    "Dam-Leven.",
    "norm.",
    "#Unique FV (Training Data)",
    "Training ∩ Evaluation",
    "% of Eval Data",
    "#Unique FV (All Data)",
    "% of Total Data",
)


@dataclass(frozen=True)
class ReconstructionRecord:
    original: str
    reconstructed: str
    edits: int
    normalized: float


def score(original: str, reconstructed: str) -> ReconstructionRecord:
    edits = damerau_levenshtein(original, reconstructed)
    longest = max(len(original), len(reconstructed))
    return ReconstructionRecord(original, reconstructed, edits, edits / longest if longest else 0.0)


def cell_means(records: Sequence[ReconstructionRecord]) -> tuple[float, float]:
    """(mean edits, mean normalized distance); sums are exact or correctly rounded."""
    if not records:
        return (0.0, 0.0)
    n = len(records)
    return (sum(r.edits for r in records) / n, math.fsum(r.normalized for r in records) / n)


def feature_rows(domains: Sequence[str], psl: PublicSuffixList | None = None) -> np.ndarray:
    psl = psl or default_psl()
    return np.stack([extract_raw(d, psl) for d in domains])


def evaluate_pairing(model: DecoderModel, eval_set: DomainSet | Sequence[str],
                     psl: PublicSuffixList | None = None, max_len: int | None = None,
                     raw_features: np.ndarray | None = None):
    """Reconstruct every domain of ``eval_set`` from its normalized features and score it."""
    domains = list(eval_set)
    if raw_features is None:
        raw_features = feature_rows(domains, psl)
    normalized = np.stack([normalize(r) for r in raw_features])
    rebuilt = reconstruct_many(model, normalized, max_len)
    records = [score(o, r) for o, r in zip(domains, rebuilt)]
    return records, cell_means(records)


@dataclass
class CrossCell:
    training: str
    evaluation: str
    mean_edits: float
    mean_normalized: float
    count: int
    baseline: bool


@dataclass
class CrossMatrix:
    sources: list[str]
    cells: dict[tuple[str, str], CrossCell] = field(default_factory=dict)
    records: dict[tuple[str, str], list[ReconstructionRecord]] = field(default_factory=dict, repr=False)

    def cell(self, training: str, evaluation: str) -> CrossCell:
        return self.cells[(training, evaluation)]

    def to_dict(self) -> dict:
        return {"sources": self.sources,
                "cells": [asdict(self.cells[(a, b)]) for a in self.sources for b in self.sources]}


def cross_matrix(models: Mapping[str, DecoderModel], sets: Mapping[str, DomainSet],
                 psl: PublicSuffixList | None = None, max_len: int | None = None) -> CrossMatrix:
    """Evaluate every source's model on every source's full set."""
    psl = psl or default_psl()
    sources = list(models)
    if not sources:
        raise ValueError("need at least one source")
    features = {name: feature_rows(list(sets[name]), psl) for name in sources}
    out = CrossMatrix(sources)
    for train_name in sources:
        for eval_name in sources:
            records, (edits, norm) = evaluate_pairing(models[train_name], sets[eval_name], psl, max_len,
                                                      raw_features=features[eval_name])
            out.records[(train_name, eval_name)] = records
            out.cells[(train_name, eval_name)] = CrossCell(
                train_name, eval_name, edits, norm, len(records), train_name == eval_name)
    return out


@dataclass
class OverlapStats:
    unique: dict[str, int]
    sizes: dict[str, int]
    intersections: dict[tuple[str, str], int]
    pct_eval_unique: dict[tuple[str, str], float]
    pct_eval_samples: dict[tuple[str, str], float]
    global_unique: int
    pct_of_global: dict[str, float]
    common_to_all: int

    def to_dict(self) -> dict:
        pairs = [
            {"training": a, "evaluation": b, "intersection": n,
             "pct_eval_unique": self.pct_eval_unique[(a, b)],
             "pct_eval_samples": self.pct_eval_samples[(a, b)]}
            for (a, b), n in self.intersections.items()
        ]
        return {"unique": self.unique, "sizes": self.sizes, "pairs": pairs,
                "global_unique": self.global_unique, "pct_of_global": self.pct_of_global,
                "common_to_all": self.common_to_all}


def feature_overlap(sets: Mapping[str, DomainSet | Sequence[str]],
                    psl: PublicSuffixList | None = None, digits: int = 12) -> OverlapStats:
    """Overlap of raw feature vectors between sources.

    Vectors are compared through their ``digits``-significant-digit
    rendering. ``pct_eval_unique`` is the intersection as a share of the
    evaluation source's unique vectors; ``pct_eval_samples`` the share of
    evaluation domains whose vector also occurs in the training source.
    """
    psl = psl or default_psl()
    keys = {name: [canonical_key(extract_raw(d, psl), digits) for d in s] for name, s in sets.items()}
    uniq = {name: set(k) for name, k in keys.items()}
    names = list(sets)
    intersections, pct_u, pct_s = {}, {}, {}
    for a in names:
        for b in names:
            common = uniq[a] & uniq[b]
            intersections[(a, b)] = len(common)
            pct_u[(a, b)] = 100.0 * len(common) / len(uniq[b]) if uniq[b] else 0.0
            covered = sum(1 for k in keys[b] if k in uniq[a])
            pct_s[(a, b)] = 100.0 * covered / len(keys[b]) if keys[b] else 0.0
    union = set().union(*uniq.values()) if uniq else set()
    common_all = set.intersection(*uniq.values()) if uniq else set()
    return OverlapStats(
        unique={n: len(u) for n, u in uniq.items()},
        sizes={n: len(k) for n, k in keys.items()},
        intersections=intersections,
        pct_eval_unique=pct_u,
        pct_eval_samples=pct_s,
        global_unique=len(union),
        pct_of_global={n: 100.0 * len(u) / len(union) if union else 0.0 for n, u in uniq.items()},
        common_to_all=len(common_all),
    )


def categorize_domain(domain: str, psl: PublicSuffixList | None = None,
                      keywords: Iterable[str] = DEFAULT_KEYWORDS) -> str:
    """'reverse-lookup', 'dns-service' or 'other'; the first matching rule wins."""
    labels = domain.lower().split(".")
    if any(tuple(labels[-2:]) == zone and len(labels) > 2 for zone in REVERSE_ZONES):
        return "reverse-lookup"
    try:
        subs = parse_domain(domain, psl or default_psl()).subdomain_labels
    except InvalidDomainError:
        subs = tuple(labels)
    if subs and all(p.isdigit() for p in subs):
        return "reverse-lookup"
    keywords = tuple(keywords)
    if any(k in label for label in labels for k in keywords):
        return "dns-service"
    return "other"


@dataclass
class CategoryBreakdown:
    fraction: float
    selected: int
    total: int
    shares: dict[str, float]
    mean_normalized: float
    overall_mean_normalized: float


def top_fraction_analysis(records: Sequence[ReconstructionRecord], fraction: float = 0.1,
                          psl: PublicSuffixList | None = None,
                          keywords: Iterable[str] = DEFAULT_KEYWORDS) -> CategoryBreakdown:
    """Category shares among the best ``ceil(fraction * N)`` reconstructions.

    Ties in normalized distance are broken by the original domain string.
    """
    if not records:
        raise EmptyRecordsError("no reconstruction records to analyze")
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction {fraction} outside (0, 1]")
    ranked = sorted(records, key=lambda r: (r.normalized, r.original))
    k = math.ceil(fraction * len(ranked) - 1e-9)
    best = ranked[:max(k, 1)]
    counts = dict.fromkeys(CATEGORIES, 0)
    for r in best:
        counts[categorize_domain(r.original, psl, keywords)] += 1
    return CategoryBreakdown(
        fraction=fraction,
        selected=len(best),
        total=len(records),
        shares={c: counts[c] / len(best) for c in CATEGORIES},
        mean_normalized=math.fsum(r.normalized for r in best) / len(best),
        overall_mean_normalized=math.fsum(r.normalized for r in records) / len(records),
    )


def transfer_records(matrix: CrossMatrix) -> list[ReconstructionRecord]:
    """Records of all off-diagonal cells, or of the single cell for one source."""
    if len(matrix.sources) == 1:
        return list(matrix.records[(matrix.sources[0],) * 2])
    return [r for (a, b), recs in matrix.records.items() if a != b for r in recs]


# -- reports ------------------------------------------------------------------------

def table_rows(matrix: CrossMatrix, overlap: OverlapStats) -> list[dict]:
    rows = []
    for a in matrix.sources:
        for b in matrix.sources:
            cell = matrix.cell(a, b)
            rows.append({
                "Training": a,
                "Evaluation": b,
                "Dam-Leven.": cell.mean_edits,
                "norm.": cell.mean_normalized,
                "#Unique FV (Training Data)": overlap.unique[a],
                "Training ∩ Evaluation": overlap.intersections[(a, b)],
                "% of Eval Data": overlap.pct_eval_unique[(a, b)],
                "#Unique FV (All Data)": overlap.global_unique,
                "% of Total Data": overlap.pct_of_global[a],
            })
    return rows


def build_report(matrix: CrossMatrix, overlap: OverlapStats,
                 breakdown: CategoryBreakdown | None = None) -> dict:
    report = {
        "columns": list(TABLE_COLUMNS),
        "rows": table_rows(matrix, overlap),
        "cross_matrix": matrix.to_dict(),
        "overlap": overlap.to_dict(),
    }
    if breakdown is not None:
        report["top_fraction"] = asdict(breakdown)
    return report


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def render_table(report: dict) -> str:
    """Aligned plain-text rendering of the report rows; baseline rows are starred."""
    header = list(report["columns"])
    body = []
    for row in report["rows"]:
        cells = [_fmt(row[c]) for c in header]
        if row["Training"] == row["Evaluation"]:
            cells[1] = "*" + cells[1]
        body.append(cells)
    widths = [max(len(h), *(len(r[i]) for r in body)) for i, h in enumerate(header)]
    lines = [" | ".join(h.ljust(w) for h, w in zip(header, widths)),
             "-+-".join("-" * w for w in widths)]
    lines += [" | ".join(c.rjust(w) if i > 1 else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths)))
              for r in body]
    if "top_fraction" in report:
        t = report["top_fraction"]
        shares = ", ".join(f"{k} {v:.1%}" for k, v in t["shares"].items())
        lines.append("")
        lines.append(f"best {t['fraction']:.0%} ({t['selected']} of {t['total']}): "
                     f"mean norm. {t['mean_normalized']:.3f} (overall {t['overall_mean_normalized']:.3f}); {shares}")
    return "\n".join(lines)


def write_records(path: str | Path, matrix: CrossMatrix) -> None:
    doc = [{"training": a, "evaluation": b, "records": [asdict(r) for r in recs]}
           for (a, b), recs in matrix.records.items()]
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)


def read_records(path: str | Path) -> dict[tuple[str, str], list[ReconstructionRecord]]:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    return {(c["training"], c["evaluation"]): [ReconstructionRecord(**r) for r in c["records"]] for c in doc}
