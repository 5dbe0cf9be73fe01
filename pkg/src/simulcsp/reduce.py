"""Reduction from general Max-w-CSP_q (truth-table predicates) to Max-w-Conj-SAT_q.

Every satisfying row of a predicate becomes one term carrying the predicate's
weight.  An assignment matches exactly one row of each predicate, so after
normalising by the total emitted weight 1/beta the value identity
val(f, W2) = beta * val(f, W1) holds for every f.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import Instance, MultiInstance, Term
from .errors import InputError


@dataclass(frozen=True)
class PredicateConstraint:
    vars: tuple
    rows: frozenset  # satisfying rows, each a tuple over [q]^arity
    q: int = 2

    def __post_init__(self):
        vs = tuple(int(v) for v in self.vars)
        if not vs or len(set(vs)) != len(vs) or min(vs) < 0:
            raise InputError(f"predicate variables must be distinct and nonnegative: {vs}")
        rows = frozenset(tuple(int(a) for a in r) for r in self.rows)
        for r in rows:
            if len(r) != len(vs) or any(not 0 <= a < self.q for a in r):
                raise InputError(f"row {r} is not in [{self.q}]^{len(vs)}")
        object.__setattr__(self, "vars", vs)
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_table(cls, vars, table, q: int = 2) -> "PredicateConstraint":
        """``table`` maps every row of [q]^arity (or a callable on rows) to a truth value."""
        rows = [r for r in itertools.product(range(q), repeat=len(vars))
                if (table(r) if callable(table) else table[r])]
        return cls(tuple(vars), frozenset(rows), q)

    @property
    def arity(self) -> int:
        return len(self.vars)

    def table(self) -> dict:
        return {r: r in self.rows for r in itertools.product(range(self.q), repeat=self.arity)}

    def evaluate(self, f) -> int:
        return int(tuple(int(f[v]) for v in self.vars) in self.rows)


class GenericInstance:
    def __init__(self, n: int, weights, q: int = 2, w: int | None = None):
        items = list(weights.items() if isinstance(weights, dict) else weights)
        for c, wt in items:
            if not isinstance(c, PredicateConstraint):
                raise InputError("generic instances hold PredicateConstraint objects")
            if c.q != q:
                raise InputError(f"predicate alphabet {c.q} differs from q={q}")
            if max(c.vars) >= n:
                raise InputError(f"predicate {c.vars} references a variable outside 0..{n - 1}")
            if not np.isfinite(wt) or wt < 0:
                raise InputError("weights must be finite and nonnegative")
        arity = max((c.arity for c, _ in items), default=1)
        w = arity if w is None else w
        if arity > w:
            raise InputError(f"predicate arity {arity} exceeds w={w}")
        self.n, self.q, self.w = int(n), int(q), int(w)
        self.constraints = [c for c, _ in items]
        self.weights = np.array([float(wt) for _, wt in items])

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def value(self, f) -> float:
        return float(sum(wt * c.evaluate(f) for c, wt in zip(self.constraints, self.weights)))


def to_conj(G: GenericInstance) -> tuple[Instance, float]:
    """Return (normalised conj instance, beta) with val(f, W2) = beta * val(f, G)."""
    emitted = []
    for c, wt in zip(G.constraints, G.weights):
        for row in sorted(c.rows):
            emitted.append((Term(tuple(zip(c.vars, row))), float(wt)))
    total = sum(wt for _, wt in emitted)
    if total <= 0:
        raise InputError("no satisfying row carries positive weight; beta is undefined")
    beta = 1.0 / total
    inst = Instance("conj", G.n, [(t, wt * beta) for t, wt in emitted], q=G.q, w=G.w)
    return inst, beta


def targets_through_reduction(targets, betas) -> list[float]:
    if len(targets) != len(betas):
        raise InputError("one beta per target is required")
    return [float(b) * float(c) for c, b in zip(targets, betas)]


def reduce_multi(instances, targets) -> tuple[MultiInstance, list[float]]:
    """Reduce every instance independently; targets are scaled by their own beta."""
    reduced = [to_conj(G) for G in instances]
    betas = [b for _, b in reduced]
    return MultiInstance([W for W, _ in reduced], targets_through_reduction(targets, betas)), betas
