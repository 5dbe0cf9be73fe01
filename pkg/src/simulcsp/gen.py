"""Instance generators: planted multi-instances and the adversarial gap families."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Clause, Cut, Instance, MultiInstance, Term, normalize, value
from .enumeration import assignments
from .errors import InputError

WEIGHT_LAWS = ("uniform", "equal", "power")


@dataclass
class PlantedBundle:
    multi: MultiInstance
    witness: np.ndarray


def _weight(rng, law: str) -> float:
    if law == "equal":
        return 1.0
    if law == "uniform":
        return float(rng.uniform(0.05, 1.0))
    return float(rng.pareto(1.5) + 1.0)


def _random_constraint(rng, kind: str, n: int, q: int, w: int, f_star, want_sat: bool):
    while True:
        vs = rng.choice(n, size=2 if kind == "cut" else w, replace=False)
        if kind == "cut":
            c = Cut(int(vs[0]), int(vs[1]))
        elif kind == "sat":
            c = Clause(tuple((int(v), bool(rng.integers(2))) for v in vs))
        elif want_sat:
            return Term({int(v): int(f_star[v]) for v in vs})
        else:
            c = Term({int(v): int(rng.integers(q)) for v in vs})
        if not want_sat:
            return c
        if kind == "cut" and f_star[c.u] != f_star[c.v]:
            return c
        if kind == "sat" and any((f_star[v] == 1) == pos for v, pos in c.lits):
            return c


def random_planted(kind: str, n: int, k: int, q: int = 2, w: int = 2, m_per_instance: int = 40,
                   bias: float = 0.85, seed: int | None = 0, weights: str = "uniform") -> PlantedBundle:
    """Multi-instance with a hidden assignment f*; targets are c_l = val(f*, W_l).

    Each constraint is, with probability ``bias``, redrawn until f* satisfies
    it.  Clauses and terms have arity exactly w.
    """
    if kind not in ("cut", "sat", "conj"):
        raise InputError(f"unknown kind {kind!r}")
    if kind != "conj":
        q = 2
    if kind == "cut":
        w = 2
    if n < max(w, 2) or k < 1 or m_per_instance < 1 or q < 2 or w < 1:
        raise InputError("need n >= max(w, 2), k >= 1, m >= 1, q >= 2, w >= 1")
    if not 0 <= bias <= 1:
        raise InputError("bias must lie in [0, 1]")
    if weights not in WEIGHT_LAWS:
        raise InputError(f"weights must be one of {WEIGHT_LAWS}")
    rng = np.random.default_rng(seed)
    f_star = rng.integers(0, q, size=n)
    if kind == "cut" and len(set(f_star.tolist())) == 1:
        f_star[0] = 1 - f_star[0]  # keeps satisfied cut edges drawable
    instances = []
    for _ in range(k):
        cons = []
        for _ in range(m_per_instance):
            want = bool(rng.random() < bias)
            cons.append((_random_constraint(rng, kind, n, q, w, f_star, want), _weight(rng, weights)))
        instances.append(normalize(Instance(kind, n, cons, q=q, w=w)))
    targets = [value(f_star, W) for W in instances]
    return PlantedBundle(MultiInstance(instances, targets), f_star)


_TRIANGLE = ((0, 1), (1, 2), (0, 2))


def gap_three_cycle(eps_w: float = 0.01) -> MultiInstance:
    """Three cut instances on a triangle; instance i is almost all on edge i.

    Targets are 1 (each instance alone is almost perfectly cuttable), so the
    objective reads as the minimum instance value.
    """
    if not 0 < eps_w < 0.5:
        raise InputError("eps_w must lie in (0, 1/2)")
    instances = []
    for i in range(3):
        wts = [(Cut(*e), 1 - eps_w if j == i else eps_w / 2) for j, e in enumerate(_TRIANGLE)]
        instances.append(Instance("cut", 3, wts))
    return MultiInstance(instances, [1.0] * 3)


def gap_k_partition(k: int = 3, part_size: int = 2) -> MultiInstance:
    """Odd cycle of k parts; instance i is the complete bipartite graph S_i x S_{i+1}."""
    if k < 3 or k % 2 == 0:
        raise InputError("k must be odd and at least 3")
    if part_size < 1:
        raise InputError("part_size must be at least 1")
    s = part_size
    parts = [range(i * s, (i + 1) * s) for i in range(k)]
    instances = []
    for i in range(k):
        edges = [(Cut(x, y), 1.0 / s ** 2) for x in parts[i] for y in parts[(i + 1) % k]]
        instances.append(Instance("cut", k * s, edges))
    return MultiInstance(instances, [1.0] * k)


def max1sat_geometric(r: int = 4) -> MultiInstance:
    """Two Max-1-SAT instances with weights decaying by 1/3: x_i versus not x_i.

    Targets are the values of the Pareto-optimal assignment that sets all but
    the last variable true.
    """
    if r < 2:
        raise InputError("r must be at least 2")
    wts = 3.0 ** -np.arange(r + 1)
    wts = wts / wts.sum()
    pos = Instance("sat", r + 1, [(Clause(((i, True),)), wt) for i, wt in enumerate(wts)], w=1)
    neg = Instance("sat", r + 1, [(Clause(((i, False),)), wt) for i, wt in enumerate(wts)], w=1)
    f = np.ones(r + 1, dtype=np.int64)
    f[-1] = 0
    return MultiInstance([pos, neg], [value(f, pos), value(f, neg)])


def random_generic(n: int, k: int, q: int = 2, w: int = 2, m_per_instance: int = 10,
                   density: float = 0.5, seed: int | None = 0):
    """Random truth-table instances for the reduction; returns ``(instances, targets, witness)``.

    Arities are drawn from 1..w; each row of a predicate is satisfying with
    probability ``density``.  Weights are normalised and targets are the
    values of a random witness.
    """
    from .reduce import GenericInstance, PredicateConstraint

    if n < w or k < 1 or q < 2 or w < 1 or m_per_instance < 1:
        raise InputError("need n >= w, k >= 1, q >= 2, w >= 1, m >= 1")
    rng = np.random.default_rng(seed)
    f = rng.integers(0, q, size=n)
    instances = []
    for _ in range(k):
        cons = []
        for _ in range(m_per_instance):
            a = int(rng.integers(1, w + 1))
            vs = tuple(int(v) for v in rng.choice(n, size=a, replace=False))
            grid = assignments(q, a)
            keep = rng.random(len(grid)) < density
            cons.append((PredicateConstraint(vs, frozenset(map(tuple, grid[keep].tolist())), q),
                         _weight(rng, "uniform")))
        total = sum(wt for _, wt in cons)
        instances.append(GenericInstance(n, [(c, wt / total) for c, wt in cons], q=q, w=w))
    return instances, [G.value(f) for G in instances], f

