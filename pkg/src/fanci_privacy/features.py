"""The 45-component FANCI feature vector and its [0, 1] normalization.

Component order follows the canonical FANCI feature table: 15 structural,
8 linguistic and 22 statistical features. Features marked as suffix-free
are computed on the sub-domain labels; the dot-free ones on the
concatenated labels (the DSF string).
"""

from __future__ import annotations

import math
import re
from collections import Counter
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .domain import MAX_LENGTH, DomainName, PublicSuffixList, default_psl, parse_domain

NGRAM_STATS = ("std", "median", "mean", "min", "max", "perc_25", "perc_75")

FEATURE_NAMES: tuple[str, ...] = (
    "length",
    "number_of_subdomains_1",
    "number_of_subdomains_2",
    "number_of_subdomains_3",
    "number_of_subdomains_4",
    "subdomain_lengths_mean",
    "contains_wwwdot",
    "has_valid_tld",
    "one_char_subdomains",
    "prefix_repetition",
    "contains_tld_as_infix",
    "only_digits_subdomains",
    "only_hex_subdomains_ratio",
    "underscore_ratio",
    "contains_ipv4_addr",
    "contains_digits",
    "vowel_ratio",
    "digit_ratio",
    "char_diversity",
    "alphabet_size",
    "ratio_of_repeated_chars",
    "consecutive_consonant_ratio",
    "consecutive_digits_ratio",
    *(f"{n}-grams_{stat}" for n in (1, 2, 3) for stat in NGRAM_STATS),
    "shannon_entropy",
)
N_FEATURES = len(FEATURE_NAMES)
IDX = {name: i for i, name in enumerate(FEATURE_NAMES)}
NGRAM_OFFSET = IDX["1-grams_std"]
SUBDOMAIN_BUCKETS = 4
MAX_ALPHABET = 38

VOWELS = frozenset("aeiou")
DIGITS = frozenset("0123456789")
HEX = frozenset("0123456789abcdef")
LETTERS = frozenset("abcdefghijklmnopqrstuvwxyz")
CONSONANTS = LETTERS - VOWELS
_OCTET = re.compile(r"(?:25[0-5]|2[0-4][0-9]|1[0-9][0-9]|[1-9]?[0-9])")

assert N_FEATURES == 45


def ngram_count_distribution(dsf: str, n: int) -> list[int]:
    """Counts of each distinct n-gram of ``dsf`` (stride 1), sorted ascending."""
    if n < 1:
        raise ValueError("n must be positive")
    if len(dsf) < n:
        return []
    return sorted(Counter(dsf[i:i + n] for i in range(len(dsf) - n + 1)).values())


def _percentile(sorted_values: Sequence[float], q: float) -> float:
    # linear interpolation between closest ranks, inclusive
    pos = q * (len(sorted_values) - 1)
    lo = math.floor(pos)
    hi = min(lo + 1, len(sorted_values) - 1)
    frac = pos - lo
    return sorted_values[lo] + (sorted_values[hi] - sorted_values[lo]) * frac


def distribution_stats(counts: Iterable[int]) -> tuple[float, ...]:
    """(std, median, mean, min, max, perc_25, perc_75); zeros for an empty input.

    Standard deviation is the population one.
    """
    values = sorted(counts)
    if not values:
        return (0.0,) * 7
    n = len(values)
    mean = math.fsum(values) / n
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / n)
    return (
        std,
        float(_percentile(values, 0.5)),
        mean,
        float(values[0]),
        float(values[-1]),
        float(_percentile(values, 0.25)),
        float(_percentile(values, 0.75)),
    )


def entropy_from_counts(counts: Iterable[int]) -> float:
    """Shannon entropy in bits of the relative frequencies of ``counts``.

    Terms are summed in ascending count order so that equal multisets give
    bit-identical results.
    """
    values = sorted(c for c in counts if c > 0)
    total = sum(values)
    if total == 0:
        return 0.0
    h = -math.fsum((c / total) * math.log2(c / total) for c in values)
    return h + 0.0  # normalizes -0.0


def shannon_entropy(dsf: str) -> float:
    return entropy_from_counts(Counter(dsf).values())


def _run_coverage(text: str, members: frozenset[str]) -> int:
    """Total length of maximal runs (length >= 2) of characters in ``members``."""
    total = run = 0
    for c in text:
        if c in members:
            run += 1
        else:
            if run >= 2:
                total += run
            run = 0
    if run >= 2:
        total += run
    return total


def _is_prefix_repetition(s: str) -> bool:
    # s is k >= 2 copies of a prefix iff s occurs inside s+s at a shift < len(s)
    return (s + s).find(s, 1) < len(s)


def _contains_ipv4(labels: Sequence[str]) -> bool:
    for i in range(len(labels) - 3):
        if all(_OCTET.fullmatch(p) for p in labels[i:i + 4]):
            return True
    return False


DSF_SLICE = slice(IDX["contains_digits"], N_FEATURES)


@lru_cache(maxsize=65536)
def _dsf_features(dsf: str) -> tuple[float, ...]:
    # every feature from contains_digits onward depends on the DSF string alone
    f = np.zeros(N_FEATURES)
    n_dsf = len(dsf)
    counts = Counter(dsf)
    digits = sum(counts[c] for c in DIGITS)
    vowels = sum(counts[c] for c in VOWELS)
    alphabet_size = len(counts)
    f[IDX["contains_digits"]] = digits > 0
    if n_dsf:
        f[IDX["digit_ratio"]] = digits / n_dsf
        f[IDX["char_diversity"]] = alphabet_size / n_dsf
        f[IDX["consecutive_consonant_ratio"]] = _run_coverage(dsf, CONSONANTS) / n_dsf
        f[IDX["consecutive_digits_ratio"]] = _run_coverage(dsf, DIGITS) / n_dsf
    if n_dsf - digits > 0:
        f[IDX["vowel_ratio"]] = vowels / (n_dsf - digits)
    f[IDX["alphabet_size"]] = alphabet_size
    if alphabet_size:
        f[IDX["ratio_of_repeated_chars"]] = sum(1 for c in counts.values() if c >= 2) / alphabet_size

    for k, n in enumerate((1, 2, 3)):
        start = NGRAM_OFFSET + 7 * k
        f[start:start + 7] = distribution_stats(ngram_count_distribution(dsf, n))
    f[IDX["shannon_entropy"]] = entropy_from_counts(counts.values())
    return tuple(f[DSF_SLICE].tolist())


def extract_raw(domain: DomainName | str, psl: PublicSuffixList | None = None) -> np.ndarray:
    """Raw (unnormalized) feature vector of a domain as 45 float64 values."""
    if psl is None:
        psl = default_psl()
    d = domain if isinstance(domain, DomainName) else parse_domain(domain, psl)
    subs = d.subdomain_labels
    dsf = d.dsf
    n_dsf = len(dsf)
    n_subs = len(subs)

    f = np.zeros(N_FEATURES)
    f[IDX["length"]] = len(d.raw)
    bucket = min(max(n_subs, 1), SUBDOMAIN_BUCKETS)
    f[IDX["number_of_subdomains_1"] + bucket - 1] = 1.0
    f[IDX["subdomain_lengths_mean"]] = n_dsf / n_subs if n_subs else 0.0
    f[IDX["contains_wwwdot"]] = "www." in d.raw
    f[IDX["has_valid_tld"]] = bool(d.public_suffix)
    f[IDX["one_char_subdomains"]] = any(len(p) == 1 for p in subs)
    f[IDX["prefix_repetition"]] = _is_prefix_repetition(d.raw)
    f[IDX["contains_tld_as_infix"]] = any(p in psl for p in subs)
    f[IDX["only_digits_subdomains"]] = any(p.isdigit() for p in subs)
    f[IDX["only_hex_subdomains_ratio"]] = (
        sum(1 for p in subs if set(p) <= HEX) / n_subs if n_subs else 0.0
    )
    f[IDX["underscore_ratio"]] = dsf.count("_") / n_dsf if n_dsf else 0.0
    f[IDX["contains_ipv4_addr"]] = _contains_ipv4(subs)

    f[DSF_SLICE] = _dsf_features(dsf)
    return f


def normalize(raw: np.ndarray) -> np.ndarray:
    """Map a raw vector into [0, 1] by each component's upper bound."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape != (N_FEATURES,):
        raise ValueError(f"expected {N_FEATURES} features, got shape {raw.shape}")
    out = raw.copy()
    length = raw[IDX["length"]]
    out[IDX["length"]] = length / MAX_LENGTH
    out[IDX["subdomain_lengths_mean"]] = raw[IDX["subdomain_lengths_mean"]] / length if length else 0.0
    alphabet_size = raw[IDX["alphabet_size"]]
    out[IDX["alphabet_size"]] = alphabet_size / MAX_ALPHABET
    for k in range(3):
        block = slice(NGRAM_OFFSET + 7 * k, NGRAM_OFFSET + 7 * k + 7)
        top = raw[block][NGRAM_STATS.index("max")]
        out[block] = raw[block] / top if top > 0 else 0.0
    entropy = raw[IDX["shannon_entropy"]]
    out[IDX["shannon_entropy"]] = entropy / math.log2(alphabet_size) if alphabet_size > 1 else 0.0
    # rounding can push ratios like H/log2(k) a few ulps past 1
    return np.clip(out, 0.0, 1.0)


def extract_normalized(domain: DomainName | str, psl: PublicSuffixList | None = None) -> np.ndarray:
    return normalize(extract_raw(domain, psl))


def extract_matrix(domains: Sequence[str], psl: PublicSuffixList | None = None,
                   normalized: bool = False) -> np.ndarray:
    """Stack feature vectors for many domains into an (N, 45) array."""
    psl = psl or default_psl()
    fn = extract_normalized if normalized else extract_raw
    if not domains:
        return np.zeros((0, N_FEATURES))
    return np.stack([fn(d, psl) for d in domains])


def canonical_key(vector: Sequence[float], digits: int = 12) -> tuple[str, ...]:
    """Hashable rendering of a vector with ``digits`` significant digits."""
    return tuple(f"{float(v):.{digits - 1}e}" if v else "0" for v in vector)
