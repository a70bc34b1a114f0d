"""Loading, cleaning, splitting and synthesizing NXDomain corpora.

All randomness comes from numpy's PCG64 generator seeded through
``SeedSequence``. Synthetic item ``i`` is drawn from the stream seeded with
``[seed, i]``, so any index range can be generated independently and the
result does not depend on how the work is chunked.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .domain import ALPHABET, PublicSuffixList, default_psl, parse_domain, read_domain_lines, validate_domain
from .errors import (
    AllLinesInvalidError,
    DatasetError,
    EmptyWordlistError,
    InvalidDomainError,
    KTooLargeError,
    TooFewSamplesError,
)

log = logging.getLogger(__name__)

GENERATORS = ("typo", "reverse-lookup", "service-misconfig", "random-label")


@dataclass
class DomainSet:
    name: str
    domains: list[str]
    invalid: int = 0
    families: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.domains)) != len(self.domains):
            raise ValueError(f"duplicate domains in set {self.name!r}")

    def __len__(self):
        return len(self.domains)

    def __iter__(self):
        return iter(self.domains)

    def __contains__(self, domain):
        return domain in self._lookup

    @cached_property
    def _lookup(self) -> frozenset[str]:
        return frozenset(self.domains)


def _unique(domains: Iterable[str]) -> list[str]:
    return list(dict.fromkeys(domains))


def load_domains(path: str | Path, name: str | None = None) -> DomainSet:
    """Read a domain list file, lowercasing and deduplicating valid lines."""
    lines = read_domain_lines(path)
    valid, invalid = [], 0
    for line in lines:
        try:
            valid.append(validate_domain(line))
        except InvalidDomainError:
            invalid += 1
    if not valid:
        raise AllLinesInvalidError(f"{path}: no valid domains ({invalid} invalid lines)")
    if invalid:
        log.info("%s: skipped %d invalid lines", path, invalid)
    return DomainSet(name or Path(path).stem, _unique(valid), invalid=invalid)


def load_dga_feed(path: str | Path, name: str = "dga") -> DomainSet:
    """Read ``domain,family`` CSV lines; the first family seen for a domain is kept."""
    domains: dict[str, str] = {}
    malformed = 0
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if lineno == 0 and parts[0].lower() == "domain":
                continue
            if len(parts) != 2 or not parts[1]:
                malformed += 1
                continue
            try:
                d = validate_domain(parts[0])
            except InvalidDomainError:
                malformed += 1
                continue
            domains.setdefault(d, parts[1])
    if malformed:
        log.info("%s: skipped %d malformed lines", path, malformed)
    return DomainSet(name, list(domains), invalid=malformed, families=domains)


def dedup_and_exclude(benign: DomainSet, others: Sequence[DomainSet], malicious: DomainSet) -> DomainSet:
    """``benign`` minus every domain in ``others`` and in ``malicious``."""
    excluded = set(malicious.domains)
    for s in others:
        excluded.update(s.domains)
    return DomainSet(benign.name, [d for d in benign.domains if d not in excluded])


def subsample(s: DomainSet, k: int, seed: int) -> DomainSet:
    """Uniform random ``k``-subset, kept in the original order."""
    if k > len(s):
        raise KTooLargeError(f"cannot draw {k} from {len(s)} domains")
    rng = np.random.default_rng(seed)
    picked = np.sort(rng.choice(len(s), size=k, replace=False))
    return DomainSet(s.name, [s.domains[i] for i in picked])


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.20
    validation_fraction_of_train: float = 0.05
    seed: int = 0

    def __post_init__(self):
        for frac in (self.test_fraction, self.validation_fraction_of_train):
            if not 0 < frac < 1:
                raise ValueError(f"fraction {frac} outside (0, 1)")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(s: DomainSet, spec: SplitSpec = SplitSpec()) -> tuple[DomainSet, DomainSet, DomainSet]:
    """Random (train, validation, test) partition; each part keeps the input order."""
    if len(s) < 20:
        raise TooFewSamplesError(f"need at least 20 domains to split, got {len(s)}")
    n = len(s)
    n_test = _round_half_up(n * spec.test_fraction)
    n_val = _round_half_up((n - n_test) * spec.validation_fraction_of_train)
    order = np.random.default_rng(spec.seed).permutation(n)
    test_idx = np.sort(order[:n_test])
    val_idx = np.sort(order[n_test:n_test + n_val])
    train_idx = np.sort(order[n_test + n_val:])
    pick = lambda idx, part: DomainSet(f"{s.name}-{part}", [s.domains[i] for i in idx])
    return pick(train_idx, "train"), pick(val_idx, "validation"), pick(test_idx, "test")


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    a, b = set(a), set(b)
    return len(a & b) / len(a | b) if a | b else 1.0


# -- synthetic corpora -------------------------------------------------------------

@dataclass
class SyntheticConfig:
    seed: int = 0
    size: int = 1000
    weights: dict[str, float] = field(default_factory=lambda: {
        "typo": 0.35, "reverse-lookup": 0.35, "service-misconfig": 0.2, "random-label": 0.1})
    wordlist: str | None = None
    name: str = "synthetic"

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("size must be >= 1")
        unknown = set(self.weights) - set(GENERATORS)
        if unknown:
            raise ValueError(f"unknown generators: {sorted(unknown)}")
        if any(w < 0 for w in self.weights.values()) or sum(self.weights.values()) <= 0:
            raise ValueError("weights must be non-negative with a positive sum")

    @classmethod
    def from_file(cls, path: str | Path) -> SyntheticConfig:
        """Parse ``key = value`` lines; generator weights use the generator names as keys."""
        values: dict[str, str] = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}: expected key = value, got {line!r}")
                key, value = (p.strip() for p in line.split("=", 1))
                values[key] = value
        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> SyntheticConfig:
        cfg = cls()
        weights = {g: float(values[g]) for g in GENERATORS if g in values}
        return cls(
            seed=int(values.get("seed", cfg.seed)),
            size=int(values.get("size", cfg.size)),
            weights=weights or cfg.weights,
            wordlist=values.get("wordlist") or None,
            name=values.get("name", cfg.name),
        )


def load_wordlist(path: str | Path | None = None) -> list[str]:
    if path is None:
        text = resources.files("fanci_privacy").joinpath("data/wordlist.txt").read_text("utf-8")
        lines = [l.split("#", 1)[0].strip() for l in text.splitlines()]
        lines = [l for l in lines if l]
    else:
        lines = read_domain_lines(path)
    words = _unique(l.lower() for l in lines)
    if not words:
        raise EmptyWordlistError(f"wordlist {path or '<bundled>'} is empty")
    return words


_LABEL_CHARS = "abcdefghijklmnopqrstuvwxyz0123456789-"
_COMMON_SUFFIXES = ("com", "net", "org", "de", "cz", "eu", "info", "io", "co.uk", "sk", "at", "ch")
_IPV6_PREFIXES = ("20010db8", "2a001450", "2a0206b8", "2001067c", "26001f18", "2a03b0c0")
_DNSBL_ZONES = ("zen.spamhaus.org", "bl.spamcop.net", "dnsbl.sorbs.net", "b.barracudacentral.org",
                "dnsbl-1.uceprotect.net", "rbl.jp", "spam.dnsbl.anonmails.de", "ix.dnsbl.manitu.net")
_SERVICE_LABELS = ("mx", "mx1", "mx2", "mail", "smtp", "_dmarc", "wpad", "isatap", "autodiscover",
                   "_ldap._tcp.dc._msdcs", "_kerberos._udp", "spam", "dkim._domainkey", "ns1")


def _pick(rng: np.random.Generator, items: Sequence):
    return items[int(rng.integers(len(items)))]


def _random_ipv4(rng: np.random.Generator) -> list[str]:
    return [str(int(x)) for x in rng.integers(0, 256, size=4)]


def _typo(rng, words, psl) -> str:
    d = parse_domain(_pick(rng, words), psl)
    if not d.subdomain_labels:
        raise InvalidDomainError(d.raw)
    label = d.subdomain_labels[-1]
    op = int(rng.integers(4))
    pos = int(rng.integers(len(label)))
    char = _pick(rng, _LABEL_CHARS)
    if op == 0 and len(label) > 1:
        label = label[:pos] + label[pos + 1:]
    elif op == 1:
        label = label[:pos] + char + label[pos:]
    elif op == 2:
        label = label[:pos] + char + label[pos + 1:]
    elif len(label) > 1:
        pos = min(pos, len(label) - 2)
        label = label[:pos] + label[pos + 1] + label[pos] + label[pos + 2:]
    labels = list(d.subdomain_labels[:-1]) + [label]
    if rng.random() < 0.15:
        labels.insert(0, "www")
    return ".".join(labels + [d.public_suffix])


def _reverse_lookup(rng, words, psl) -> str:
    if rng.random() < 0.7:
        return ".".join(reversed(_random_ipv4(rng))) + ".in-addr.arpa"
    nibbles = _pick(rng, _IPV6_PREFIXES) + "".join(_pick(rng, "0123456789abcdef") for _ in range(24))
    return ".".join(reversed(nibbles)) + ".ip6.arpa"


def _service_misconfig(rng, words, psl) -> str:
    if rng.random() < 0.5:
        return ".".join(reversed(_random_ipv4(rng))) + "." + _pick(rng, _DNSBL_ZONES)
    return _pick(rng, _SERVICE_LABELS) + "." + _pick(rng, words)


def _random_label(rng, words, psl) -> str:
    labels = []
    for _ in range(1 + int(rng.random() < 0.3)):
        n = int(rng.integers(5, 16))
        labels.append("".join(_pick(rng, "abcdefghijklmnopqrstuvwxyz0123456789") for _ in range(n)))
    return ".".join(labels) + "." + _pick(rng, _COMMON_SUFFIXES)


_GENERATOR_FNS = {
    "typo": _typo,
    "reverse-lookup": _reverse_lookup,
    "service-misconfig": _service_misconfig,
    "random-label": _random_label,
}


def synthetic_item(cfg: SyntheticConfig, index: int, words: Sequence[str],
                   psl: PublicSuffixList | None = None) -> str | None:
    """The ``index``-th candidate domain of a synthetic source, or None if invalid."""
    psl = psl or default_psl()
    rng = np.random.default_rng([cfg.seed, index])
    names = [g for g in GENERATORS if cfg.weights.get(g, 0) > 0]
    probs = np.array([cfg.weights[g] for g in names], dtype=np.float64)
    kind = names[int(rng.choice(len(names), p=probs / probs.sum()))]
    try:
        return validate_domain(_GENERATOR_FNS[kind](rng, words, psl))
    except InvalidDomainError:
        return None


def generate_synthetic_source(cfg: SyntheticConfig, psl: PublicSuffixList | None = None) -> DomainSet:
    """Exactly ``cfg.size`` unique, valid synthetic NXDomains."""
    psl = psl or default_psl()
    needs_words = any(cfg.weights.get(g, 0) > 0 for g in ("typo", "service-misconfig"))
    words = load_wordlist(cfg.wordlist) if needs_words else []
    seen: dict[str, None] = {}
    index = 0
    limit = 100 * cfg.size + 1000
    while len(seen) < cfg.size:
        if index >= limit:
            raise DatasetError(f"only {len(seen)} unique domains after {index} draws")
        d = synthetic_item(cfg, index, words, psl)
        if d is not None:
            seen.setdefault(d, None)
        index += 1
    return DomainSet(cfg.name, list(seen))


def write_domains(path: str | Path, domains: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for d in domains:
            f.write(d + "\n")


assert set(_LABEL_CHARS) <= set(ALPHABET)
