"""Damerau-Levenshtein distance (optimal string alignment variant)."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class DistanceResult:
    edits: int
    normalized: float


def damerau_levenshtein(a: str, b: str) -> int:
    """Minimum number of insertions, deletions, substitutions and adjacent
    transpositions turning ``a`` into ``b``, with no substring edited twice.

    >>> damerau_levenshtein("kitten", "sitting")
    3
    >>> damerau_levenshtein("ab", "ba")
    1
    """
    if a == b:
        return 0
    n, m = len(a), len(b)
    if n == 0:
        return m
    if m == 0:
        return n
    # three rolling rows: i-2, i-1, i
    before = None
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        ai = a[i - 1]
        for j in range(1, m + 1):
            cost = 0 if ai == b[j - 1] else 1
            best = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if i > 1 and j > 1 and ai == b[j - 2] and a[i - 2] == b[j - 1]:
                best = min(best, before[j - 2] + 1)
            cur[j] = best
        before, prev = prev, cur
    return prev[m]


def normalized_distance(a: str, b: str) -> float:
    """Edit distance divided by the longer length; 0.0 for two empty strings."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return damerau_levenshtein(a, b) / longest


def distance(a: str, b: str) -> DistanceResult:
    edits = damerau_levenshtein(a, b)
    longest = max(len(a), len(b))
    return DistanceResult(edits, edits / longest if longest else 0.0)
