"""Desk-scale cross-source experiment on synthetic corpora."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace

from .dataset import (DomainSet, SplitSpec, SyntheticConfig, dedup_and_exclude,
                      generate_synthetic_source, split, subsample)
from .domain import PublicSuffixList, default_psl
from .evaluation import (build_report, cross_matrix, feature_overlap, top_fraction_analysis,
                         transfer_records)
from .features import extract_matrix
from .reconstructor import DecoderModel, ModelConfig, TrainingHistory, build_model, train

log = logging.getLogger(__name__)

# three "networks" with different mixes of failure causes
DEFAULT_MIXES = {
    "net-a": {"typo": 0.5, "reverse-lookup": 0.3, "service-misconfig": 0.1, "random-label": 0.1},
    "net-b": {"typo": 0.3, "reverse-lookup": 0.4, "service-misconfig": 0.2, "random-label": 0.1},
    "net-c": {"typo": 0.2, "reverse-lookup": 0.3, "service-misconfig": 0.4, "random-label": 0.1},
}


@dataclass
class ExperimentResult:
    sets: dict[str, DomainSet]
    models: dict[str, DecoderModel]
    histories: dict[str, TrainingHistory]
    report: dict = field(repr=False)

    def digest(self) -> str:
        """SHA-256 over the report and every model tensor."""
        h = hashlib.sha256(json.dumps(self.report, sort_keys=True).encode())
        for name in sorted(self.models):
            for key, arr in self.models[name].params.items():
                h.update(key.encode())
                h.update(arr.tobytes())
        return h.hexdigest()


def build_sources(size: int, seed: int, mixes: dict[str, dict[str, float]] = DEFAULT_MIXES,
                  psl: PublicSuffixList | None = None) -> dict[str, DomainSet]:
    """One synthetic set per mix, made pairwise disjoint and cut to ``size``."""
    psl = psl or default_psl()
    raw = {}
    for i, (name, weights) in enumerate(mixes.items()):
        cfg = SyntheticConfig(seed=seed * 1000 + i, size=size + size // 4, weights=weights, name=name)
        raw[name] = generate_synthetic_source(cfg, psl)
    out = {}
    for i, name in enumerate(raw):
        others = [s for n, s in raw.items() if n != name]
        clean = dedup_and_exclude(raw[name], others, DomainSet("dga", []))
        out[name] = subsample(clean, size, seed * 1000 + i)
    return out


def run_experiment(size: int = 5000, seed: int = 0, fraction: float = 0.1,
                   model_cfg: ModelConfig | None = None,
                   mixes: dict[str, dict[str, float]] = DEFAULT_MIXES,
                   psl: PublicSuffixList | None = None) -> ExperimentResult:
    psl = psl or default_psl()
    model_cfg = replace(model_cfg or ModelConfig(), seed=seed)
    sets = build_sources(size, seed, mixes, psl)
    models, histories = {}, {}
    for name, s in sets.items():
        tr, va, _ = split(s, SplitSpec(seed=seed))
        x_tr = extract_matrix(tr.domains, psl, normalized=True)
        x_va = extract_matrix(va.domains, psl, normalized=True)
        models[name], histories[name] = train(build_model(model_cfg), x_tr, tr.domains, x_va, va.domains, model_cfg)
        log.info("%s: best epoch %d, %s", name, histories[name].best_epoch, histories[name].stop_reason)
    matrix = cross_matrix(models, sets, psl)
    overlap = feature_overlap(sets, psl)
    breakdown = top_fraction_analysis(transfer_records(matrix), fraction, psl)
    report = build_report(matrix, overlap, breakdown)
    report["training"] = {n: {"best_epoch": h.best_epoch, "epochs": len(h.val_loss), "stop_reason": h.stop_reason}
                          for n, h in histories.items()}
    return ExperimentResult(sets, models, histories, report)
