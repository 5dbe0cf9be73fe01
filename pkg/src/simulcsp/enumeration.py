"""Exhaustive search over all assignments h to a fixed variable set S.

For a completion g of V minus S, the instance values of h u g decompose as

    values(h, g) = inside(h) + mixed(h) @ select(g) + outside(g)

``inside`` holds constraints living entirely in S, ``outside`` those avoiding
S.  A mixed constraint depends on h and on the values g gives its free slots,
so it is expanded once into one column per free-value combination; a
completion then just selects one column per mixed constraint.  This makes the
sweep over many completions (one per LP in the w-SAT algorithm, one per leaf
in the tree algorithm) a dense matrix product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MultiInstance, ratios
from .errors import InputError, ResourceError

DEFAULT_BUDGET = 2 ** 26
CHUNK = 2 ** 14


def assignments(q: int, s: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows ``start..stop`` of the lexicographic list of [q]^s (first column most significant)."""
    stop = q ** s if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    powers = q ** np.arange(s - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % q


def _sat_from_got(kind: str, got: np.ndarray, vals: np.ndarray, mask: np.ndarray) -> np.ndarray:
    if kind == "cut":
        return got[..., 0] != got[..., 1]
    hit = got == vals
    if kind == "sat":
        return (hit & mask).any(axis=-1)
    return (hit | ~mask).all(axis=-1)


@dataclass
class Best:
    g_index: int
    h_index: int
    h: np.ndarray
    assignment: np.ndarray
    values: np.ndarray
    objective: float
    evaluated: int


class Enumerator:
    def __init__(self, multi: MultiInstance, S, budget: int = DEFAULT_BUDGET):
        self.multi = multi
        self.S = np.array([int(v) for v in S], dtype=np.int64)
        if len(set(self.S.tolist())) != len(self.S):
            raise InputError("S must not repeat variables")
        self.q = multi.q
        self.size = self.q ** len(self.S)
        if self.size > budget:
            raise ResourceError(
                f"enumerating {self.q}^{len(self.S)} assignments exceeds the budget of {budget}",
                partial={"S": self.S.tolist()},
            )
        arr, Wm = multi.arrays, multi.weight_matrix
        keep = (Wm != 0).any(axis=1)
        in_s = np.isin(arr.vars, self.S) & arr.mask
        n_in = in_s.sum(axis=1)
        width = arr.mask.sum(axis=1)
        self.kind = arr.kind
        self.inside = np.nonzero(keep & (n_in == width))[0]
        self.outside = np.nonzero(keep & (n_in == 0))[0]
        mixed = np.nonzero(keep & (n_in > 0) & (n_in < width))[0]
        self.mixed = mixed
        self.W = Wm

        # expanded columns: one per (mixed constraint, free-value combination)
        ex_vars, ex_vals, ex_mask, ex_fixed, ex_isS = [], [], [], [], []
        offsets, free_vars = [], []
        for i in mixed:
            slots = np.nonzero(arr.mask[i])[0]
            fs = [j for j in slots if not in_s[i, j]]
            offsets.append(len(ex_vars))
            free_vars.append(arr.vars[i, fs])
            for combo in assignments(self.q, len(fs)):
                fixed = np.zeros(arr.vars.shape[1], dtype=np.int64)
                fixed[fs] = combo
                ex_vars.append(arr.vars[i])
                ex_vals.append(arr.vals[i])
                ex_mask.append(arr.mask[i])
                ex_fixed.append(fixed)
                ex_isS.append(in_s[i])
        width_all = arr.vars.shape[1]
        self.ex_vars = np.array(ex_vars, dtype=np.int64).reshape(-1, width_all)
        self.ex_vals = np.array(ex_vals, dtype=np.int64).reshape(-1, width_all)
        self.ex_mask = np.array(ex_mask, dtype=bool).reshape(-1, width_all)
        self.ex_fixed = np.array(ex_fixed, dtype=np.int64).reshape(-1, width_all)
        self.ex_isS = np.array(ex_isS, dtype=bool).reshape(-1, width_all)
        self.offsets = np.array(offsets, dtype=np.int64)
        maxfree = max((len(f) for f in free_vars), default=0)
        self.fv = np.full((len(mixed), maxfree), -1, dtype=np.int64)
        self.fv_pow = np.zeros((len(mixed), maxfree), dtype=np.int64)
        for idx, f in enumerate(free_vars):
            self.fv[idx, :len(f)] = f
            self.fv_pow[idx, :len(f)] = self.q ** np.arange(len(f) - 1, -1, -1)
        self.fv_mask = self.fv >= 0
        self._cache = None

    # -- per-chunk matrices
    def _chunk(self, start: int, stop: int):
        if self._cache is not None and self._cache[0] == (start, stop):
            return self._cache[1]
        H = assignments(self.q, len(self.S), start, stop)
        X = np.zeros((len(H), self.multi.n), dtype=np.int64)
        X[:, self.S] = H
        arr = self.multi.arrays
        base = np.zeros((len(H), self.multi.k))
        if len(self.inside):
            ins = arr.vars[self.inside]
            got = X[:, np.where(arr.mask[self.inside], ins, 0)]
            sat = _sat_from_got(self.kind, got, arr.vals[self.inside], arr.mask[self.inside])
            base = sat.astype(float) @ self.W[self.inside]
        M = np.zeros((len(H), len(self.ex_vars)))
        if len(self.ex_vars):
            got = X[:, np.where(self.ex_mask, self.ex_vars, 0)]
            got = np.where(self.ex_isS, got, self.ex_fixed)
            M = _sat_from_got(self.kind, got, self.ex_vals, self.ex_mask).astype(float)
        out = (H, base, M)
        if stop - start == self.size:
            self._cache = ((start, stop), out)
        return out

    def _codes(self, G: np.ndarray) -> np.ndarray:
        """(G, n_mixed) column offsets chosen by each completion."""
        if not len(self.mixed):
            return np.zeros((len(G), 0), dtype=np.int64)
        digits = G[:, np.where(self.fv_mask, self.fv, 0)] * self.fv_pow
        return self.offsets[None, :] + digits.sum(axis=2)

    def _outside(self, g: np.ndarray) -> np.ndarray:
        if not len(self.outside):
            return np.zeros(self.multi.k)
        arr = self.multi.arrays
        ins = arr.vars[self.outside]
        got = g[np.where(arr.mask[self.outside], ins, 0)]
        sat = _sat_from_got(self.kind, got, arr.vals[self.outside], arr.mask[self.outside])
        return sat.astype(float) @ self.W[self.outside]

    def per_completion(self, completions, batch: int = 128) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """For each completion g: (first maximising h index, its objective); also returns G."""
        G = np.array([np.asarray(g, dtype=np.int64) for g in completions]).reshape(-1, self.multi.n)
        if not len(G):
            raise InputError("need at least one completion")
        k, targets = self.multi.k, self.multi.targets
        codes = self._codes(G)
        outs = np.array([self._outside(g) for g in G])
        Wmix = self.W[self.mixed]
        E = len(self.ex_vars)
        best_h = np.full(len(G), -1, dtype=np.int64)
        best_o = np.full(len(G), -np.inf)
        for a in range(0, self.size, CHUNK):
            b = min(a + CHUNK, self.size)
            _, base, M = self._chunk(a, b)
            for g0 in range(0, len(G), batch):
                g1 = min(g0 + batch, len(G))
                sel = np.zeros((E, g1 - g0, k))
                rows = codes[g0:g1]
                for col in range(rows.shape[1]):
                    sel[rows[:, col], np.arange(g1 - g0)] = Wmix[col]
                vals = (M @ sel.reshape(E, (g1 - g0) * k)).reshape(b - a, g1 - g0, k)
                vals += base[:, None, :] + outs[None, g0:g1, :]
                obj = ratios(vals, targets).min(axis=2)
                j = np.argmax(obj, axis=0)
                top = obj[j, np.arange(g1 - g0)]
                better = top > best_o[g0:g1]
                best_o[g0:g1] = np.where(better, top, best_o[g0:g1])
                best_h[g0:g1] = np.where(better, a + j, best_h[g0:g1])
        return best_h, best_o, G

    def finish(self, g: np.ndarray, h_index: int, g_index: int = 0, evaluated: int = 0) -> Best:
        h = assignments(self.q, len(self.S), h_index, h_index + 1)[0]
        f = np.asarray(g, dtype=np.int64).copy()
        f[self.S] = h
        values = self.multi.values(f[None, :])[0]
        return Best(g_index, h_index, h, f, values, float(ratios(values, self.multi.targets).min()), evaluated)

    def best(self, completions, batch: int = 128) -> Best:
        """Maximise min_l val/c_l over all (g, h); the first maximum in (g, h) order wins."""
        best_h, best_o, G = self.per_completion(completions, batch)
        gi = int(np.argmax(best_o))
        return self.finish(G[gi], int(best_h[gi]), gi, self.size * len(G))
