"""Independent reference computations used as test oracles.

Each oracle solves its problem a different way from the library code: edit
distances by exhaustive edit-script search, pre-images by enumerating a
small universe, the decoder forward pass with scalar loops.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# -- edit scripts ------------------------------------------------------------------

def all_strings(alphabet: str, max_len: int) -> list[str]:
    out = [""]
    for n in range(1, max_len + 1):
        out.extend("".join(p) for p in itertools.product(alphabet, repeat=n))
    return out


class ScriptSearch:
    """Cheapest left-to-right edit script from a source to every string of the universe.

    A script reads the source once, left to right, and writes an output.
    Steps: copy or substitute one character (cost 0/1), delete one (1),
    insert one (1), or read two characters and write them swapped (1).
    Output strings are enumerated explicitly, so the result for a target is
    the minimum over every script that writes exactly that target.
    """

    def __init__(self, alphabet: str, max_len: int):
        self.alphabet = alphabet
        self.strings = all_strings(alphabet, max_len)
        self.index = {s: i for i, s in enumerate(self.strings)}
        n = len(self.strings)
        self.append = np.full((n, len(alphabet)), -1, dtype=np.int64)
        for s, i in self.index.items():
            if len(s) < max_len:
                for k, ch in enumerate(alphabet):
                    self.append[i, k] = self.index[s + ch]
        self.by_length = [np.array([i for s, i in self.index.items() if len(s) == L])
                          for L in range(max_len + 1)]

    def _relax(self, dst_row, src_idx, src_cost, targets):
        ok = targets >= 0
        np.minimum.at(dst_row, targets[ok], src_cost[ok])

    def distances_from(self, source: str) -> np.ndarray:
        n = len(self.strings)
        inf = np.iinfo(np.int64).max // 4
        cost = np.full((len(source) + 1, n), inf, dtype=np.int64)
        cost[0, self.index[""]] = 0
        cols = {ch: k for k, ch in enumerate(self.alphabet)}
        for i in range(len(source) + 1):
            row = cost[i]
            # insertions keep i; process shortest outputs first
            for level in self.by_length:
                c = row[level] + 1
                for k in range(len(self.alphabet)):
                    self._relax(row, level, c, self.append[level, k])
            live = np.nonzero(row < inf)[0]
            if i == len(source):
                break
            c = row[live]
            # deletion
            np.minimum.at(cost[i + 1], live, c + 1)
            # copy / substitute
            for ch, k in cols.items():
                self._relax(cost[i + 1], live, c + (ch != source[i]), self.append[live, k])
            # swap of the next two source characters
            if i + 1 < len(source):
                first = self.append[live, cols[source[i + 1]]]
                ok = first >= 0
                second = np.full_like(first, -1)
                second[ok] = self.append[first[ok], cols[source[i]]]
                self._relax(cost[i + 2], live, c + 1, second)
        return cost[len(source)]


# -- micro universe ----------------------------------------------------------------

MICRO_DIGITS = "0"
MICRO_VOWELS = "ae"
MICRO_OTHERS = "bc"
MICRO_ALPHABET = MICRO_DIGITS + MICRO_VOWELS + MICRO_OTHERS
MICRO_SUFFIX = "x"


def char_class(ch: str) -> str:
    if ch in MICRO_DIGITS:
        return "d"
    if ch in MICRO_VOWELS:
        return "v"
    return "o"


def micro_domains(max_dsf: int = 6, min_len: int = 4):
    """Every domain '<labels>.x' whose dot-free part has 1..max_dsf micro characters.

    Yields (domain, dsf, cut positions) for each content string and each way
    of cutting it into labels.
    """
    for L in range(1, max_dsf + 1):
        gaps = list(range(1, L))
        cut_sets = [c for r in range(L) for c in itertools.combinations(gaps, r)]
        for chars in itertools.product(MICRO_ALPHABET, repeat=L):
            dsf = "".join(chars)
            for cuts in cut_sets:
                bounds = (0, *cuts, L)
                labels = [dsf[a:b] for a, b in zip(bounds, bounds[1:])]
                domain = ".".join(labels) + "." + MICRO_SUFFIX
                if len(domain) >= min_len:
                    yield domain, dsf, cuts


# -- decoder -------------------------------------------------------------------------

def _sig(x):
    return 1.0 / (1.0 + math.exp(-x))


def reference_step_probs(params: dict, W: int, features, tokens) -> list[list[float]]:
    """Teacher-forced output distributions for one sample, with scalar loops."""
    P = {k: np.asarray(v, dtype=np.float64).tolist() for k, v in params.items()}

    def dense(x, w, b):
        return [math.tanh(sum(x[i] * w[i][j] for i in range(len(x))) + b[j]) for j in range(len(b))]

    h = dense(dense(list(features), P["h_dense1.weight"], P["h_dense1.bias"]),
              P["h_dense2.weight"], P["h_dense2.bias"])
    c = dense(dense(list(features), P["c_dense1.weight"], P["c_dense1.bias"]),
              P["c_dense2.weight"], P["c_dense2.bias"])
    V = len(P["output.bias"])
    out = []
    for tok in tokens[:-1]:
        z = [P["lstm.weight_input"][tok][j] + P["lstm.bias"][j]
             + sum(h[k] * P["lstm.weight_recurrent"][k][j] for k in range(W))
             for j in range(4 * W)]
        i_g = [_sig(z[j]) for j in range(W)]
        f_g = [_sig(z[W + j]) for j in range(W)]
        g_g = [math.tanh(z[2 * W + j]) for j in range(W)]
        o_g = [_sig(z[3 * W + j]) for j in range(W)]
        c = [f_g[j] * c[j] + i_g[j] * g_g[j] for j in range(W)]
        h = [o_g[j] * math.tanh(c[j]) for j in range(W)]
        logits = [sum(h[k] * P["output.weight"][k][v] for k in range(W)) + P["output.bias"][v] for v in range(V)]
        top = max(logits)
        e = [math.exp(x - top) for x in logits]
        s = sum(e)
        out.append([x / s for x in e])
    return out


def numeric_gradients(model, features, tokens, loss_fn, eps: float = 1e-6) -> dict[str, np.ndarray]:
    """Central finite differences of ``loss_fn(model, features, tokens)`` for every parameter."""
    grads = {}
    for name, value in model.params.items():
        g = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            old = value[idx]
            value[idx] = old + eps
            up = loss_fn(model, features, tokens)
            value[idx] = old - eps
            down = loss_fn(model, features, tokens)
            value[idx] = old
            g[idx] = (up - down) / (2 * eps)
        grads[name] = g
    return grads


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.abs(a).max(), np.abs(b).max(), 1e-12)
    return float(np.abs(a - b).max() / scale)
