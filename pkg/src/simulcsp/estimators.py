"""Mean and variance quantities that drive the influential-variable loops.

``varest``/``meanest`` are the cheap h-independent bounds used by the MaxCut and
w-SAT loops; ``meancalc``/``varcalc`` are exact moments of the active
contribution Y under an independent product rounding.

The exact moments expand every active constraint into a signed sum of
conjunctions over free variables:

* term           -> itself (assigned bindings already checked)
* clause         -> 1 - [all free literals false]   (0 terms if already satisfied)
* cut, one free  -> [x_free != h(other)]
* cut, both free -> [x_u=0, x_v=1] + [x_u=1, x_v=0]

Covariances of conjunctions have a closed form, so ``Var[Y]`` is a sum over
pairs of conjunctions sharing a free variable.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from scipy import sparse

from .core import Instance, PartialAssignment, _hv, active_degrees
from .errors import InputError, InvariantViolation


@dataclass(frozen=True)
class Params:
    delta0: float
    eps0: float
    gamma: float
    t: int
    alpha: float | None = None
    schedule: str = "default"

    def __post_init__(self):
        if min(self.delta0, self.eps0, self.gamma) <= 0:
            raise InputError("delta0, eps0 and gamma must be positive")
        if int(self.t) != self.t or self.t < 1:
            raise InputError("t must be a positive integer")
        object.__setattr__(self, "t", int(self.t))

    @property
    def threshold_factor(self) -> float:
        return self.delta0 * self.eps0 ** 2

    def to_dict(self) -> dict:
        return asdict(self)


ConjParams = Params


class ProductDistribution:
    """Independent per-variable distributions over [q].

    ``probs[v, i]`` is Pr[g(v) = i]; rows of assigned variables are ignored by
    every consumer.
    """

    def __init__(self, probs):
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 2 or probs.shape[1] < 2:
            raise InputError("probs must be an (n, q) array")
        if np.any(probs < -1e-12) or not np.allclose(probs.sum(axis=1), 1.0, atol=1e-9):
            raise InputError("each row of probs must be a probability distribution")
        self.probs = np.clip(probs, 0.0, 1.0)

    @classmethod
    def boolean(cls, p1) -> "ProductDistribution":
        p1 = np.asarray(p1, dtype=float)
        return cls(np.column_stack([1.0 - p1, p1]))

    @classmethod
    def uniform(cls, n: int, q: int = 2) -> "ProductDistribution":
        return cls(np.full((n, q), 1.0 / q))

    @property
    def n(self) -> int:
        return self.probs.shape[0]

    @property
    def q(self) -> int:
        return self.probs.shape[1]

    @property
    def p1(self) -> np.ndarray:
        return self.probs[:, 1]

    def min_prob(self, free: np.ndarray | None = None) -> float:
        rows = self.probs if free is None else self.probs[free]
        return float(rows.min()) if rows.size else 1.0


# ---------------------------------------------------------------- cheap bounds

def _share_matrix(arrays, active, free):
    """Sparse (m, m) pattern of pairs of active constraints sharing a free variable."""
    rows, cols = np.nonzero(free & active[:, None])
    inc = sparse.csr_matrix(
        (np.ones(len(rows)), (rows, arrays.vars[rows, cols])),
        shape=(arrays.m, max(arrays.n, 1)),
    )
    return (inc @ inc.T).sign()


def varest(W: Instance, S) -> float:
    """Sum of W(C1) W(C2) over ordered pairs (diagonal included) sharing a free variable."""
    active, _, free = W.arrays.status(_hv(W, S))
    if not active.any():
        return 0.0
    M = _share_matrix(W.arrays, active, free)
    return float(W.weights @ (M @ W.weights))


def meanest(W: Instance, S, factor: float) -> float:
    active = W.arrays.status(_hv(W, S))[0]
    return float(factor * W.weights[active].sum())


# ------------------------------------------------------------- exact moments

@dataclass
class _Expansion:
    owner: np.ndarray   # (r,) constraint index
    coef: np.ndarray    # (r,) +-1
    vars: np.ndarray    # (r, width) -1 padded, free variables only
    vals: np.ndarray    # (r, width)
    const: np.ndarray   # (m,) constant part per constraint (active ones only)


def _expand(W: Instance, hv: np.ndarray) -> _Expansion:
    arr = W.arrays
    active, _, free = arr.status(hv)
    width = arr.vars.shape[1]
    const = np.zeros(arr.m)
    owner, coef, tv, ta = [], [], [], []

    def add(i, c, vs, As):
        owner.append(i)
        coef.append(c)
        tv.append(list(vs) + [-1] * (width - len(vs)))
        ta.append(list(As) + [0] * (width - len(As)))

    for i in np.nonzero(active)[0]:
        fs = free[i]
        vs = arr.vars[i][fs]
        As = arr.vals[i][fs]
        if W.kind == "conj":
            add(i, 1.0, vs, As)
        elif W.kind == "sat":
            const[i] = 1.0
            assigned = arr.mask[i] & ~fs
            if np.any(hv[arr.vars[i][assigned]] == arr.vals[i][assigned]):
                continue
            add(i, -1.0, vs, 1 - As)
        else:
            u, v = arr.vars[i, 0], arr.vars[i, 1]
            if hv[u] >= 0:
                add(i, 1.0, [v], [1 - hv[u]])
            elif hv[v] >= 0:
                add(i, 1.0, [u], [1 - hv[v]])
            else:
                add(i, 1.0, [u, v], [0, 1])
                add(i, 1.0, [u, v], [1, 0])
    r = len(owner)
    return _Expansion(
        np.array(owner, dtype=np.int64),
        np.array(coef, dtype=float),
        np.array(tv, dtype=np.int64).reshape(r, width),
        np.array(ta, dtype=np.int64).reshape(r, width),
        const,
    )


def _term_probs(ex: _Expansion, P: np.ndarray) -> np.ndarray:
    mask = ex.vars >= 0
    got = P[np.where(mask, ex.vars, 0), ex.vals]
    return np.where(mask, got, 1.0).prod(axis=1)


def _hv_values(W: Instance, rho) -> np.ndarray:
    if not isinstance(rho, PartialAssignment):
        if len(list(rho)):
            raise InputError("exact moments depend on the values on S; pass a PartialAssignment")
        rho = PartialAssignment()
    return rho.as_array(W.n)


def _check_p(W: Instance, p: ProductDistribution) -> np.ndarray:
    if p.n != W.n or p.q != W.q:
        raise InputError(f"distribution shape {p.probs.shape} does not match instance (n={W.n}, q={W.q})")
    return p.probs


def meancalc(rho, p: ProductDistribution, W: Instance) -> float:
    """Exact E[Y], Y = sum over active C of W(C) C(rho u g), g ~ p."""
    P = _check_p(W, p)
    ex = _expand(W, _hv_values(W, rho))
    mean = float(W.weights @ ex.const)
    if len(ex.owner):
        mean += float((W.weights[ex.owner] * ex.coef) @ _term_probs(ex, P))
    return mean


def varcalc(rho, p: ProductDistribution, W: Instance) -> float:
    """Exact Var[Y] as a sum of covariances of conjunctions sharing a free variable."""
    P = _check_p(W, p)
    ex = _expand(W, _hv_values(W, rho))
    r = len(ex.owner)
    if r == 0:
        return 0.0
    mask = ex.vars >= 0
    rows, cols = np.nonzero(mask)
    inc = sparse.csr_matrix((np.ones(len(rows)), (rows, ex.vars[rows, cols])), shape=(r, W.n))
    pairs = sparse.triu(inc @ inc.T).tocoo()
    i, j = pairs.row, pairs.col
    probs = _term_probs(ex, P)
    amp = W.weights[ex.owner] * ex.coef

    vi, ai, mi = ex.vars[i], ex.vals[i], mask[i]
    vj, aj, mj = ex.vars[j], ex.vals[j], mask[j]
    same = (vi[:, :, None] == vj[:, None, :]) & mi[:, :, None] & mj[:, None, :]
    conflict = (same & (ai[:, :, None] != aj[:, None, :])).any(axis=(1, 2))
    # probability mass of shared requirements, counted twice in probs[i]*probs[j]
    shared_p = np.where(same.any(axis=2), P[np.where(mi, vi, 0), ai], 1.0).prod(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        joint = np.where(shared_p > 0, probs[i] * probs[j] / shared_p, 0.0)
    # a zero-probability shared requirement makes both sides of the product zero
    joint = np.where(conflict, 0.0, joint)
    cov = joint - probs[i] * probs[j]
    mult = np.where(i == j, 1.0, 2.0)
    return float(np.sum(mult * amp[i] * amp[j] * cov))


# --------------------------------------------------------- loop primitives

def high_variance(var_q: float, mean_q: float, params: Params) -> bool:
    """Variance test; the degenerate 0 >= 0 case counts as concentrated."""
    return var_q >= params.threshold_factor * mean_q ** 2 and var_q > 0


def find_heavy_variable(rho, W: Instance, gamma: float, check: bool = True) -> int:
    """Argmax active-degree variable (smallest index on ties).

    With ``check`` the lemma bound deg(v) >= gamma * total is verified and a
    violation raises :class:`InvariantViolation`.
    """
    hv = _hv(W, rho)
    deg = active_degrees(rho, W)
    total = float(deg.sum())
    if total <= 0:
        raise InputError("no active constraint: total active degree is 0")
    masked = np.where(hv < 0, deg, -np.inf)
    v = int(np.argmax(masked))
    if check and deg[v] < gamma * total * (1 - 1e-12):
        raise InvariantViolation(
            f"heavy variable {v} has active degree {deg[v]:.3e} < gamma*total = {gamma * total:.3e}"
        )
    return v
