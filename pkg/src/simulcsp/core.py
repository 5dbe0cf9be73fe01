"""Data model for weighted CSP instances and the partial-assignment bookkeeping.

Three constraint families share one representation:

* ``Cut(u, v)``       satisfied iff f(u) != f(v)
* ``Clause(lits)``    disjunction of literals ``(var, positive)``
* ``Term(bind)``      conjunction ``var == value`` over a q-ary alphabet

Every instance keeps padded numpy arrays (``vars``, ``vals``, ``mask``) so the
solvers can evaluate thousands of assignments at once.  A literal slot is
"true" when ``x[var] == val``; for clauses ``val`` is 1 for a positive literal
and 0 for a negated one, for terms it is the required value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import InputError

KINDS = ("cut", "sat", "conj")
WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class Cut:
    u: int
    v: int

    def __post_init__(self):
        u, v = int(self.u), int(self.v)
        if u == v:
            raise InputError(f"cut constraint needs two distinct endpoints, got ({u}, {v})")
        if u < 0 or v < 0:
            raise InputError("variable indices must be nonnegative")
        object.__setattr__(self, "u", min(u, v))
        object.__setattr__(self, "v", max(u, v))

    @property
    def variables(self) -> tuple[int, ...]:
        return (self.u, self.v)

    def slots(self) -> tuple[tuple[int, int], ...]:
        return ((self.u, 0), (self.v, 0))


@dataclass(frozen=True)
class Clause:
    lits: tuple[tuple[int, bool], ...]

    def __post_init__(self):
        lits = tuple(sorted((int(v), bool(s)) for v, s in self.lits))
        if not lits:
            raise InputError("clause must contain at least one literal")
        vs = [v for v, _ in lits]
        if len(set(vs)) != len(vs):
            raise InputError(f"clause variables must be distinct: {vs}")
        if vs[0] < 0:
            raise InputError("variable indices must be nonnegative")
        object.__setattr__(self, "lits", lits)

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.lits)

    def slots(self) -> tuple[tuple[int, int], ...]:
        return tuple((v, int(s)) for v, s in self.lits)


@dataclass(frozen=True)
class Term:
    bind: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if isinstance(self.bind, Mapping):
            items = self.bind.items()
        else:
            items = self.bind
        bind = tuple(sorted((int(v), int(a)) for v, a in items))
        if not bind:
            raise InputError("term must bind at least one variable")
        vs = [v for v, _ in bind]
        if len(set(vs)) != len(vs):
            raise InputError(f"term variables must be distinct: {vs}")
        if vs[0] < 0 or min(a for _, a in bind) < 0:
            raise InputError("term variables and values must be nonnegative")
        object.__setattr__(self, "bind", bind)

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.bind)

    def slots(self) -> tuple[tuple[int, int], ...]:
        return self.bind


Constraint = Union[Cut, Clause, Term]
_KIND_OF = {Cut: "cut", Clause: "sat", Term: "conj"}


def constraint_kind(c: Constraint) -> str:
    return _KIND_OF[type(c)]


def evaluate_constraint(c: Constraint, f: Sequence[int]) -> int:
    n = len(f)
    for v in c.variables:
        if v >= n:
            raise InputError(f"variable {v} outside assignment of length {n}")
    if isinstance(c, Cut):
        return int(f[c.u] != f[c.v])
    if isinstance(c, Clause):
        return int(any((f[v] == 1) == pos for v, pos in c.lits))
    return int(all(f[v] == a for v, a in c.bind))


@dataclass(frozen=True)
class PartialAssignment:
    """A pair (S, h); ``h`` is an insertion-ordered mapping whose keys are S."""

    h: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "h", {int(v): int(a) for v, a in dict(self.h).items()})

    @property
    def S(self) -> tuple[int, ...]:
        return tuple(self.h)

    def __contains__(self, v) -> bool:
        return v in self.h

    def __len__(self) -> int:
        return len(self.h)

    def extend(self, variables: Sequence[int], values: Sequence[int]) -> "PartialAssignment":
        h = dict(self.h)
        for v, a in zip(variables, values):
            if v in h:
                raise InputError(f"variable {v} already assigned")
            h[int(v)] = int(a)
        return PartialAssignment(h)

    def as_array(self, n: int) -> np.ndarray:
        hv = np.full(n, -1, dtype=np.int64)
        for v, a in self.h.items():
            if v >= n:
                raise InputError(f"variable {v} outside range 0..{n - 1}")
            hv[v] = a
        return hv

    @classmethod
    def from_set(cls, S: Iterable[int]) -> "PartialAssignment":
        # Cut/sat activity only depends on S, so the values are placeholders.
        return cls({int(v): 0 for v in S})


@dataclass
class ConstraintArrays:
    """Padded array form of a constraint list (shared by instances and unions)."""

    kind: str
    n: int
    q: int
    constraints: tuple
    vars: np.ndarray
    vals: np.ndarray
    mask: np.ndarray

    @classmethod
    def build(cls, kind: str, n: int, q: int, constraints: Sequence[Constraint]) -> "ConstraintArrays":
        width = max([len(c.variables) for c in constraints], default=1)
        m = len(constraints)
        vars_ = np.full((m, width), -1, dtype=np.int64)
        vals = np.zeros((m, width), dtype=np.int64)
        for i, c in enumerate(constraints):
            for j, (v, a) in enumerate(c.slots()):
                vars_[i, j] = v
                vals[i, j] = a
        return cls(kind, n, q, tuple(constraints), vars_, vals, vars_ >= 0)

    @property
    def m(self) -> int:
        return len(self.constraints)

    def satisfied(self, X: np.ndarray) -> np.ndarray:
        """(B, n) full assignments -> (B, m) boolean satisfaction matrix."""
        X = np.atleast_2d(X)
        if self.m == 0:
            return np.zeros((X.shape[0], 0), dtype=bool)
        safe = np.where(self.mask, self.vars, 0)
        got = X[:, safe]
        if self.kind == "cut":
            return got[:, :, 0] != got[:, :, 1]
        hit = got == self.vals
        if self.kind == "sat":
            return (hit & self.mask).any(axis=2)
        return (hit | ~self.mask).all(axis=2)

    def status(self, hv: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Activity under a partial assignment vector (-1 = free).

        Returns ``(active, fixed_value, free_slots)``; ``fixed_value`` is only
        meaningful where ``active`` is false.
        """
        safe = np.where(self.mask, self.vars, 0)
        got = hv[safe]
        assigned = (got >= 0) & self.mask
        free = (got < 0) & self.mask
        any_free = free.any(axis=1)
        if self.kind == "conj":
            contradicted = (assigned & (got != self.vals)).any(axis=1)
            active = any_free & ~contradicted
            fixed = ~contradicted & ~any_free
        else:
            active = any_free
            if self.kind == "cut":
                fixed = got[:, 0] != got[:, 1]
            else:
                fixed = (assigned & (got == self.vals)).any(axis=1)
        return active, fixed & ~active, free


def _coerce_constraint(kind: str, c) -> Constraint:
    if isinstance(c, (Cut, Clause, Term)):
        return c
    if kind == "cut":
        return Cut(*c)
    if kind == "sat":
        return Clause(tuple(c))
    return Term(c)


class Instance:
    """A weighted constraint family on variables 0..n-1.

    ``weights`` may be a mapping ``constraint -> weight`` or an iterable of
    pairs; duplicate constraints merge by adding their weights.
    """

    def __init__(self, kind: str, n: int, weights, q: int = 2, w: int | None = None):
        if kind not in KINDS:
            raise InputError(f"unknown instance kind {kind!r}")
        if n < 0:
            raise InputError("n must be nonnegative")
        if kind in ("cut", "sat") and q != 2:
            raise InputError(f"{kind} instances are Boolean (q=2)")
        if q < 2:
            raise InputError("alphabet size q must be at least 2")
        items = weights.items() if isinstance(weights, Mapping) else weights
        merged: dict = {}
        for c, wt in items:
            c = _coerce_constraint(kind, c)
            if constraint_kind(c) != kind:
                raise InputError(f"{type(c).__name__} constraint in a {kind} instance")
            wt = float(wt)
            if not np.isfinite(wt) or wt < 0:
                raise InputError(f"weights must be finite and nonnegative, got {wt}")
            merged[c] = merged.get(c, 0.0) + wt
        arity = max([len(c.variables) for c in merged], default=1)
        if kind == "cut":
            w = 2
        elif w is None:
            w = arity
        if arity > w:
            raise InputError(f"constraint arity {arity} exceeds w={w}")
        for c in merged:
            if max(c.variables) >= n:
                raise InputError(f"constraint {c} references a variable outside 0..{n - 1}")
            if kind == "conj" and max(a for _, a in c.bind) >= q:
                raise InputError(f"term {c} uses a value outside 0..{q - 1}")
        self.kind = kind
        self.n = int(n)
        self.q = int(q)
        self.w = int(w)
        self.constraints: tuple = tuple(merged)
        self.weights = np.array([merged[c] for c in self.constraints], dtype=float)

    def __repr__(self):
        return f"Instance(kind={self.kind!r}, n={self.n}, q={self.q}, w={self.w}, m={len(self.constraints)})"

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.kind, self.n, self.q, self.w) == (other.kind, other.n, other.q, other.w) and \
            self.weight_map() == other.weight_map()

    def weight_map(self) -> dict:
        return dict(zip(self.constraints, self.weights.tolist()))

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def is_normalized(self) -> bool:
        return abs(self.total_weight - 1.0) <= WEIGHT_TOL

    @cached_property
    def arrays(self) -> ConstraintArrays:
        return ConstraintArrays.build(self.kind, self.n, self.q, self.constraints)

    @cached_property
    def incidence(self) -> dict[int, list[int]]:
        """Variable -> indices of constraints mentioning it."""
        index: dict[int, list[int]] = {}
        for i, c in enumerate(self.constraints):
            for v in c.variables:
                index.setdefault(v, []).append(i)
        return index


def normalize(W: Instance) -> Instance:
    total = W.total_weight
    if total <= 0:
        raise InputError("cannot normalize an instance of total weight 0")
    return Instance(W.kind, W.n, zip(W.constraints, (W.weights / total).tolist()), q=W.q, w=W.w)


class MultiInstance:
    """k instances on a shared variable set together with target values."""

    def __init__(self, instances: Sequence[Instance], targets: Sequence[float]):
        instances = list(instances)
        if not instances:
            raise InputError("a multi-instance needs at least one instance")
        if len(targets) != len(instances):
            raise InputError(f"{len(instances)} instances but {len(targets)} targets")
        first = instances[0]
        for W in instances[1:]:
            if (W.kind, W.n, W.q) != (first.kind, first.n, first.q):
                raise InputError("instances must share kind, n and q")
        targets = [float(c) for c in targets]
        if any(not np.isfinite(c) or c < 0 for c in targets):
            raise InputError("targets must be finite and nonnegative")
        self.instances = instances
        self.targets = np.array(targets, dtype=float)
        self.kind = first.kind
        self.n = first.n
        self.q = first.q
        self.w = max(W.w for W in instances)

    @property
    def k(self) -> int:
        return len(self.instances)

    def __repr__(self):
        return f"MultiInstance(kind={self.kind!r}, n={self.n}, k={self.k}, targets={self.targets.tolist()})"

    @cached_property
    def _union(self):
        order: dict = {}
        for W in self.instances:
            for c in W.constraints:
                order.setdefault(c, len(order))
        cons = tuple(order)
        Wm = np.zeros((len(cons), self.k))
        for l, W in enumerate(self.instances):
            for c, wt in zip(W.constraints, W.weights):
                Wm[order[c], l] += wt
        return ConstraintArrays.build(self.kind, self.n, self.q, cons), Wm

    @property
    def arrays(self) -> ConstraintArrays:
        return self._union[0]

    @property
    def weight_matrix(self) -> np.ndarray:
        """(m_union, k) weights of the union constraint list."""
        return self._union[1]

    def values(self, X: np.ndarray) -> np.ndarray:
        """(B, n) assignments -> (B, k) instance values."""
        return self.arrays.satisfied(X).astype(float) @ self.weight_matrix


def ratios(values, targets) -> np.ndarray:
    """val/c per instance with the c = 0 -> +inf convention."""
    values = np.asarray(values, dtype=float)
    targets = np.asarray(targets, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = values / np.where(targets > 0, targets, 1.0)
    return np.where(targets > 0, r, np.inf)


def _check_assignment(f, n: int, q: int) -> np.ndarray:
    f = np.asarray(f, dtype=np.int64)
    if f.shape != (n,):
        raise InputError(f"assignment must have length {n}, got shape {f.shape}")
    if n and (f.min() < 0 or f.max() >= q):
        raise InputError(f"assignment values must lie in 0..{q - 1}")
    return f


def value(f, W: Instance) -> float:
    f = _check_assignment(f, W.n, W.q)
    sat = W.arrays.satisfied(f[None, :])[0]
    return float(sat @ W.weights)


def _hv(W: Instance, rho) -> np.ndarray:
    if isinstance(rho, PartialAssignment):
        return rho.as_array(W.n)
    if W.kind == "conj":
        raise InputError("conj activity depends on values; pass a PartialAssignment")
    return PartialAssignment.from_set(rho).as_array(W.n)


def active_mask(rho, W: Instance) -> np.ndarray:
    return W.arrays.status(_hv(W, rho))[0]


def is_active(C: Constraint, rho: PartialAssignment, kind: str | None = None) -> bool:
    kind = kind or constraint_kind(C)
    free = [v for v in C.variables if v not in rho.h]
    if not free:
        return False
    if kind == "conj":
        return all(rho.h[v] == a for v, a in C.bind if v in rho.h)
    return True


def fixed_value(C: Constraint, rho: PartialAssignment) -> int:
    if is_active(C, rho):
        raise InputError(f"{C} is still active under the partial assignment")
    if isinstance(C, Term):
        return int(all(rho.h.get(v) == a for v, a in C.bind))
    return evaluate_constraint(C, _dense(rho, max(C.variables) + 1))


def _dense(rho: PartialAssignment, n: int) -> list[int]:
    f = [0] * n
    for v, a in rho.h.items():
        if v < n:
            f[v] = a
    return f


def val_partial(rho, W: Instance) -> float:
    active, fixed, _ = W.arrays.status(_hv(W, rho))
    return float(W.weights[fixed & ~active].sum())


def active_degrees(rho, W: Instance) -> np.ndarray:
    """Vector of active degrees for every variable (0 on assigned variables)."""
    active, _, free = W.arrays.status(_hv(W, rho))
    deg = np.zeros(W.n)
    sel = free & active[:, None]
    rows, cols = np.nonzero(sel)
    np.add.at(deg, W.arrays.vars[rows, cols], W.weights[rows])
    return deg


def active_degree(v: int, rho, W: Instance) -> float:
    hv = _hv(W, rho)
    if not 0 <= v < W.n:
        raise InputError(f"variable {v} out of range")
    if hv[v] >= 0:
        raise InputError(f"variable {v} is already assigned")
    return float(active_degrees(rho, W)[v])


def active_degree_set(T: Iterable[int], rho, W: Instance) -> float:
    T = sorted(set(int(v) for v in T))
    if not T:
        raise InputError("active_degree_set needs a nonempty variable set")
    hv = _hv(W, rho)
    if any(hv[v] >= 0 for v in T):
        raise InputError("T must consist of unassigned variables")
    active = W.arrays.status(hv)[0]
    vars_ = W.arrays.vars
    contains = np.ones(len(W.constraints), dtype=bool)
    for v in T:
        contains &= (vars_ == v).any(axis=1)
    return float(W.weights[active & contains].sum())


def active_degree_total(rho, W: Instance) -> float:
    return float(active_degrees(rho, W).sum())


def shares_active_variable(C1: Constraint, C2: Constraint, rho) -> bool:
    S = rho.h if isinstance(rho, PartialAssignment) else set(rho)
    shared = set(C1.variables) & set(C2.variables)
    if not any(v not in S for v in shared):
        return False
    if isinstance(rho, PartialAssignment):
        return is_active(C1, rho) and is_active(C2, rho)
    return True
