"""Combinatorial pre-image analysis of the FANCI feature extractor.

Everything that counts is computed with Python integers; floats only enter
through the feature values themselves and the entropy comparison.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .domain import MAX_LENGTH, MIN_LENGTH, PublicSuffixList, default_psl
from .errors import InconsistentFeaturesError
from .features import IDX, entropy_from_counts

DOMAIN_ALPHABET_SIZE = 39
ROUNDING_TOL = 1e-6
ENTROPY_TOL = 1e-6
# unique-character caps per group (digits, vowels, others) as used in the content count
GROUP_CAPS = (10, 5, 24)

# "Choices" column of the feature table, one factor per feature kind
FEATURE_CHOICES: tuple[tuple[int, int], ...] = (
    (250, 15),
    (251, 9),
    (2, 8),
    (38, 1),
    (39, 1),
    (194, 1),
)


@dataclass(frozen=True)
class InferredQuantities:
    p1: int  # DSF length
    p2: int  # number of sub-domains
    p3: int  # public suffix length
    p4: int  # digit occurrences
    p5: int  # vowel occurrences
    p6: int  # other occurrences


@dataclass(frozen=True)
class GroupAllocation:
    u_d: int
    u_v: int
    u_o: int
    multiplicity: int = 1

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.u_d, self.u_v, self.u_o)


# -- space sizes ---------------------------------------------------------------

def domain_space_size(alphabet: int = DOMAIN_ALPHABET_SIZE, min_len: int = MIN_LENGTH,
                      max_len: int = MAX_LENGTH) -> int:
    return sum(alphabet ** i for i in range(min_len, max_len + 1))


def feature_space_size(choices: Iterable[tuple[int, int]] = FEATURE_CHOICES) -> int:
    total = 1
    for base, power in choices:
        total *= base ** power
    return total


def reduction_ratio() -> Fraction:
    return Fraction(domain_space_size(), feature_space_size())


def to_scientific(value: int | Fraction, digits: int | None = None) -> tuple[str, int]:
    """Decimal mantissa string and base-10 exponent of a positive value.

    With ``digits=None`` an integer is rendered exactly; otherwise the mantissa
    is rounded half-up to ``digits`` significant digits.
    """
    value = Fraction(value)
    if value < 0:
        raise ValueError("negative values are not supported")
    if value == 0:
        return ("0", 0)
    if digits is None:
        if value.denominator != 1:
            raise ValueError("exact rendering needs an integer")
        s = str(value.numerator)
        mantissa = s[0] + ("." + s[1:].rstrip("0") if s[1:].rstrip("0") else "")
        return (mantissa, len(s) - 1)
    exponent = len(str(value.numerator // value.denominator)) - 1 if value >= 1 else None
    if exponent is None:
        exponent = 0
        while value * Fraction(10) ** (-exponent) < 1:
            exponent -= 1
    scaled = value * Fraction(10) ** (digits - 1 - exponent)
    n = math.floor(scaled + Fraction(1, 2))
    if n >= 10 ** digits:  # rounding carried into a new digit
        n //= 10
        exponent += 1
    s = str(n)
    mantissa = s[0] + ("." + s[1:] if len(s) > 1 else "")
    return (mantissa, exponent)


def from_scientific(mantissa: str, exponent: int) -> Fraction:
    return Fraction(Decimal(mantissa)) * Fraction(10) ** exponent


def render_big(value: int | Fraction, digits: int = 3) -> str:
    m, e = to_scientific(value, digits)
    return f"{m}e{e}"


# -- inference -------------------------------------------------------------------

def _round_checked(x: float, name: str, tol: float) -> int:
    n = round(x)
    if abs(x - n) > tol:
        raise InconsistentFeaturesError(f"{name}={x!r} is not within {tol} of an integer")
    return int(n)


def infer_quantities(raw: Sequence[float], tol: float = ROUNDING_TOL) -> InferredQuantities:
    """Recover DSF length, label count, suffix length and group totals from raw features."""
    raw = np.asarray(raw, dtype=np.float64)
    diversity = raw[IDX["char_diversity"]]
    mean_len = raw[IDX["subdomain_lengths_mean"]]
    if diversity <= 0 or mean_len <= 0:
        raise InconsistentFeaturesError("char_diversity and subdomain_lengths_mean must be positive")
    p1 = _round_checked(raw[IDX["alphabet_size"]] / diversity, "p1", tol)
    p2 = _round_checked(p1 / mean_len, "p2", tol)
    p3 = int(round(raw[IDX["length"]])) - (p1 + p2)
    p4 = _round_checked(raw[IDX["digit_ratio"]] * p1, "p4", tol)
    p5 = _round_checked(raw[IDX["vowel_ratio"]] * (p1 - p4), "p5", tol)
    p6 = p1 - (p4 + p5)
    q = InferredQuantities(p1, p2, p3, p4, p5, p6)
    if min(p1, p2, p4, p5, p6) < 0 or p3 < 0 or p1 == 0 or p2 == 0:
        raise InconsistentFeaturesError(f"negative or empty quantity in {q}")
    return q


def true_quantities(dsf: str, n_subdomains: int, suffix: str) -> InferredQuantities:
    """Quantities read straight off a parsed domain (the ground truth for inference)."""
    digits = sum(c.isdigit() for c in dsf)
    vowels = sum(c in "aeiou" for c in dsf)
    return InferredQuantities(len(dsf), n_subdomains, len(suffix), digits, vowels,
                              len(dsf) - digits - vowels)


# -- frequency distribution ------------------------------------------------------

def _xlogx(c: int) -> float:
    return c * math.log2(c) if c > 1 else 0.0


def _xlogx_range(remaining: int, k: int, cap: int) -> tuple[float, float]:
    """Min and max of sum(c*log2 c) over k parts in [1, cap] summing to ``remaining``."""
    q, r = divmod(remaining, k)
    low = r * _xlogx(q + 1) + (k - r) * _xlogx(q)
    extra = remaining - k
    if cap == 1 or extra == 0:
        return low, low
    full, rest = divmod(extra, cap - 1)
    high = full * _xlogx(cap)
    if full < k:
        high += _xlogx(1 + rest)
    return low, high


def solve_frequency_distribution(p1: int, n: int, entropy_bits: float,
                                 tol: float = ENTROPY_TOL) -> list[tuple[int, ...]]:
    """All partitions of ``p1`` into ``n`` positive parts with entropy within ``tol``.

    Partitions come back as non-increasing tuples, in lexicographically
    descending order. Branches whose reachable entropy range misses the
    target are pruned.
    """
    if not 1 <= n <= p1:
        raise ValueError(f"need 1 <= n <= p1, got n={n}, p1={p1}")
    # H = log2 p1 - sum(c log2 c) / p1, so match on the sum instead
    target = p1 * (math.log2(p1) - entropy_bits)
    slack = p1 * tol + 1e-9 * max(1.0, abs(target))
    found: list[tuple[int, ...]] = []
    parts: list[int] = []

    def walk(remaining: int, k: int, cap: int, acc: float):
        if k == 0:
            if remaining == 0 and abs(entropy_from_counts(parts) - entropy_bits) <= tol:
                found.append(tuple(parts))
            return
        if not k <= remaining <= k * cap:
            return
        low, high = _xlogx_range(remaining, k, cap)
        if acc + low > target + slack or acc + high < target - slack:
            return
        hi = min(cap, remaining - (k - 1))
        lo = -(-remaining // k)  # first part is at least the average
        for c in range(hi, lo - 1, -1):
            parts.append(c)
            walk(remaining - c, k - 1, c, acc + _xlogx(c))
            parts.pop()

    walk(p1, n, p1, 0.0)
    return found


def count_entropy_candidates(p1: int, n: int) -> int:
    """Compositions of ``p1`` into ``n`` positive parts."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.comb(p1 - 1, n - 1)


# -- group allocation ----------------------------------------------------------

def enumerate_group_allocations(part: Sequence[int], q: InferredQuantities,
                                caps: tuple[int, int, int] = GROUP_CAPS) -> list[GroupAllocation]:
    """Assign frequency bins to digit/vowel/other groups matching (p4, p5, p6).

    Bins of equal size are interchangeable, so an assignment is a choice of
    how many bins of each size go to each group. Assignments sharing the
    same unique counts are merged; ``multiplicity`` counts them.
    """
    if sum(part) != q.p1:
        raise ValueError(f"partition sums to {sum(part)}, expected p1={q.p1}")
    sizes = sorted(set(part), reverse=True)
    mult = [part.count(s) for s in sizes]
    targets = (q.p4, q.p5, q.p6)
    found: dict[tuple[int, int, int], int] = {}

    def walk(i: int, sums: tuple[int, int, int], uniq: tuple[int, int, int]):
        if any(s > t for s, t in zip(sums, targets)) or any(u > c for u, c in zip(uniq, caps)):
            return
        if i == len(sizes):
            if sums == targets:
                found[uniq] = found.get(uniq, 0) + 1
            return
        size, m = sizes[i], mult[i]
        for a in range(m + 1):
            for b in range(m - a + 1):
                c = m - a - b
                walk(i + 1,
                     (sums[0] + a * size, sums[1] + b * size, sums[2] + c * size),
                     (uniq[0] + a, uniq[1] + b, uniq[2] + c))

    walk(0, (0, 0, 0), (0, 0, 0))
    return [GroupAllocation(*u, multiplicity=k) for u, k in sorted(found.items())]


# -- pre-image counts ------------------------------------------------------------

def dsf_struct(q: InferredQuantities) -> int:
    """Slot patterns for digits/vowels/others times dot placements."""
    return math.comb(q.p1, q.p4) * math.comb(q.p1 - q.p4, q.p5) * math.comb(q.p1 - 1, q.p2 - 1)


def dsf_cont(allocs: Iterable[GroupAllocation], q: InferredQuantities,
             caps: tuple[int, int, int] = GROUP_CAPS) -> int:
    total = 0
    for u in {a.key for a in allocs}:
        u_d, u_v, u_o = u
        # Python's 0 ** 0 == 1, the neutral value for an empty group
        total += (math.comb(caps[0], u_d) * math.comb(caps[1], u_v) * math.comb(caps[2], u_o)
                  * u_d ** q.p4 * u_v ** q.p5 * u_o ** q.p6)
    return total


def preimage_bound(q: InferredQuantities, allocs: Iterable[GroupAllocation], t_f: int) -> int:
    if t_f < 0:
        raise ValueError("t_f must be non-negative")
    return t_f * dsf_struct(q) * dsf_cont(allocs, q)


@dataclass
class PreimageReport:
    quantities: InferredQuantities
    partitions: list[tuple[int, ...]]
    allocations: list[GroupAllocation]
    t_f: int
    entropy_candidates: int
    struct: int
    content: int
    bound: int

    def to_dict(self) -> dict:
        return {
            "quantities": asdict(self.quantities),
            "partitions": [list(p) for p in self.partitions],
            "allocations": [asdict(a) for a in self.allocations],
            "t_f": self.t_f,
            "entropy_candidates": str(self.entropy_candidates),
            "dsf_struct": str(self.struct),
            "dsf_cont": str(self.content),
            "preimage_bound": str(self.bound),
            "preimage_bound_sci": list(to_scientific(self.bound, 4)) if self.bound else ["0", 0],
        }


def analyze_features(raw: Sequence[float], psl: PublicSuffixList | None = None,
                     tol: float = ENTROPY_TOL) -> PreimageReport:
    """Full pre-image bound for one raw feature vector.

    Allocations are pooled over every partition the entropy admits, so the
    bound covers all of them.
    """
    psl = psl or default_psl()
    raw = np.asarray(raw, dtype=np.float64)
    q = infer_quantities(raw)
    n = int(round(raw[IDX["alphabet_size"]]))
    partitions = solve_frequency_distribution(q.p1, n, float(raw[IDX["shannon_entropy"]]), tol)
    pooled: dict[tuple[int, int, int], int] = {}
    for part in partitions:
        for a in enumerate_group_allocations(part, q):
            pooled[a.key] = pooled.get(a.key, 0) + a.multiplicity
    allocs = [GroupAllocation(*k, multiplicity=m) for k, m in sorted(pooled.items())]
    t_f = psl.count_of_length(q.p3)
    struct = dsf_struct(q)
    content = dsf_cont(allocs, q)
    return PreimageReport(q, partitions, allocs, t_f, count_entropy_candidates(q.p1, n),
                          struct, content, t_f * struct * content)


def spaces_report() -> dict:
    s, f = domain_space_size(), feature_space_size()
    ratio = reduction_ratio()
    return {
        "domain_space": {"exact": str(s), "scientific": list(to_scientific(s, 3))},
        "feature_space": {"exact": str(f), "scientific": list(to_scientific(f, 3))},
        "reduction": {"scientific": list(to_scientific(ratio, 4))},
    }
