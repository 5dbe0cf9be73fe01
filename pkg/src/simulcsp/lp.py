"""Relaxation systems, a dense phase-1 simplex, smooth maps and rounding.

Variable layout of a built relaxation:

* sat  : one column ``t_v`` per variable (Pr-style value of x_v = 1)
* conj : q columns ``t_{v,i}`` per variable plus the row sum_i t_{v,i} = 1
* both : one ``z_C`` column per union constraint with nonzero weight
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import MultiInstance, PartialAssignment, evaluate_constraint
from .errors import InputError, SolverError
from .estimators import ProductDistribution

LE, EQ, GE = -1, 0, 1
FEAS_TOL = 1e-7
_PIVOT_TOL = 1e-9
_SENSE_TXT = {LE: "<=", EQ: "=", GE: ">="}


@dataclass
class LinearSystem:
    nvars: int
    lo: np.ndarray
    hi: np.ndarray
    labels: list = field(default_factory=list)
    rows: list = field(default_factory=list)  # (cols, coefs, sense, rhs)
    kind: str | None = None
    n: int = 0
    q: int = 2
    rho: PartialAssignment | None = None
    t_cols: np.ndarray | None = None  # (n,) for sat, (n, q) for conj
    z_cols: dict = field(default_factory=dict)  # union constraint index -> column
    z_rows: list = field(default_factory=list)  # indices of rows bounding some z
    target_rows: list = field(default_factory=list)
    constraints: tuple = ()  # union constraint list the z columns refer to
    fix_rows: dict = field(default_factory=dict)  # variable in S -> row pinning it
    z_row_col: list = field(default_factory=list)  # z column bounded by each z row
    _dense: tuple | None = field(default=None, repr=False, compare=False)

    @classmethod
    def empty(cls, nvars: int = 0, lo=0.0, hi=np.inf) -> "LinearSystem":
        return cls(nvars, np.full(nvars, float(lo)), np.full(nvars, float(hi)),
                   [f"x{j}" for j in range(nvars)])

    def add_var(self, label: str, lo: float = 0.0, hi: float = np.inf) -> int:
        if lo > hi:
            raise InputError(f"inconsistent bounds for {label}: {lo} > {hi}")
        self._dense = None
        self.lo = np.append(self.lo, lo)
        self.hi = np.append(self.hi, hi)
        self.labels.append(label)
        self.nvars += 1
        return self.nvars - 1

    def add_row(self, coeffs: dict, sense: int, rhs: float) -> int:
        cols = np.fromiter(coeffs.keys(), dtype=np.int64, count=len(coeffs))
        vals = np.fromiter(coeffs.values(), dtype=float, count=len(coeffs))
        if not np.all(np.isfinite(vals)) or not np.isfinite(rhs):
            raise InputError("row coefficients must be finite")
        self.rows.append((cols, vals, int(sense), float(rhs)))
        self._dense = None
        return len(self.rows) - 1

    def copy(self) -> "LinearSystem":
        other = LinearSystem(self.nvars, self.lo.copy(), self.hi.copy(), list(self.labels),
                             list(self.rows), self.kind, self.n, self.q, self.rho,
                             self.t_cols, dict(self.z_cols), list(self.z_rows), list(self.target_rows),
                             self.constraints, dict(self.fix_rows), list(self.z_row_col))
        if self._dense is not None:
            other._dense = tuple(a.copy() for a in self._dense)
        return other

    def dense(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(A, sense, rhs); cached, callers must not modify the arrays."""
        if self._dense is None:
            self._dense = self._build_dense()
        return self._dense

    def _build_dense(self):
        A = np.zeros((len(self.rows), self.nvars))
        sense = np.zeros(len(self.rows), dtype=np.int64)
        rhs = np.zeros(len(self.rows))
        for r, (cols, vals, s, b) in enumerate(self.rows):
            np.add.at(A[r], cols, vals)
            sense[r] = s
            rhs[r] = b
        return A, sense, rhs

    def violation(self, x) -> float:
        """Largest row or bound violation of the point x."""
        x = np.asarray(x, dtype=float)
        worst = float(max(np.max(self.lo - x, initial=0.0), np.max(x - self.hi, initial=0.0)))
        if not self.rows:
            return worst
        A, sense, rhs = self.dense()
        gap = A @ x - rhs
        gap = np.where(sense == LE, gap, np.where(sense == GE, -gap, np.abs(gap)))
        return max(worst, float(gap.max()))

    def dump(self) -> str:
        lines = []
        for cols, vals, s, b in self.rows:
            terms = " ".join(f"{v:+g} {self.labels[c]}" for c, v in zip(cols, vals))
            lines.append(f"{terms} {_SENSE_TXT[s]} {b:g}")
        for j in range(self.nvars):
            lines.append(f"{self.lo[j]:g} <= {self.labels[j]} <= {self.hi[j]:g}")
        return "\n".join(lines)


@dataclass
class LpSolution:
    x: np.ndarray
    system: LinearSystem

    @property
    def t(self) -> np.ndarray | None:
        if self.system.t_cols is None:
            return None
        return self.x[self.system.t_cols]

    @property
    def z(self) -> np.ndarray:
        """z values indexed like the union constraint list (0 where no column)."""
        out = np.zeros(max(self.system.z_cols, default=-1) + 1)
        for i, col in self.system.z_cols.items():
            out[i] = self.x[col]
        return out


# ------------------------------------------------------------------ builders

def _as_multi(instances) -> MultiInstance:
    if isinstance(instances, MultiInstance):
        return instances
    instances = list(instances)
    return MultiInstance(instances, [0.0] * len(instances))


def build_ll1(rho: PartialAssignment, kind: str, instances) -> LinearSystem:
    multi = _as_multi(instances)
    if kind != multi.kind:
        raise InputError(f"instances are {multi.kind}, requested {kind}")
    if kind == "cut":
        raise InputError("the MaxCut algorithm uses no LP relaxation")
    n, q = multi.n, multi.q
    arr, Wm = multi.arrays, multi.weight_matrix
    sys_ = LinearSystem.empty(0)
    sys_.kind, sys_.n, sys_.q, sys_.rho = kind, n, q, rho
    sys_.constraints = arr.constraints
    if kind == "sat":
        t_cols = np.array([sys_.add_var(f"t{v}", 0.0, 1.0) for v in range(n)], dtype=np.int64)
    else:
        t_cols = np.array([[sys_.add_var(f"t{v}_{i}", 0.0, 1.0) for i in range(q)] for v in range(n)],
                          dtype=np.int64).reshape(n, q)
    sys_.t_cols = t_cols
    if kind == "conj":
        for v in range(n):
            sys_.add_row({int(c): 1.0 for c in t_cols[v]}, EQ, 1.0)
    for v, a in rho.h.items():
        if not 0 <= v < n or not 0 <= a < q:
            raise InputError(f"partial assignment {v}->{a} out of range")
        sys_.fix_rows[v] = sys_.add_row(*_fix_row(sys_, v, a))
    for i in np.nonzero((Wm > 0).any(axis=1))[0]:
        C = arr.constraints[i]
        z = sys_.add_var(f"z{i}", 0.0, 1.0)
        sys_.z_cols[int(i)] = z
        if kind == "sat":
            # sum_{pos} t_v + sum_{neg} (1 - t_v) - z >= 0
            coeffs = {z: -1.0}
            negs = 0
            for v, pos in C.lits:
                coeffs[int(t_cols[v])] = 1.0 if pos else -1.0
                negs += not pos
            sys_.z_rows.append(sys_.add_row(coeffs, GE, -float(negs)))
            sys_.z_row_col.append(z)
        else:
            for v, a in C.bind:
                sys_.z_rows.append(sys_.add_row({z: 1.0, int(t_cols[v, a]): -1.0}, LE, 0.0))
                sys_.z_row_col.append(z)
    return sys_


def _fix_row(system: LinearSystem, v: int, a: int):
    if system.kind == "sat":
        return {int(system.t_cols[v]): 1.0}, EQ, float(a)
    return {int(system.t_cols[v, a]): 1.0}, EQ, 1.0


def refix(system: LinearSystem, rho: PartialAssignment) -> LinearSystem:
    """Copy of ``system`` with the same S pinned to the values of ``rho``."""
    if set(rho.h) != set(system.fix_rows):
        raise InputError("refix needs a partial assignment on the same set S")
    system.dense()
    out = system.copy()
    A, _, rhs = out._dense
    for v, a in rho.h.items():
        if not 0 <= a < system.q:
            raise InputError(f"value {a} out of range for variable {v}")
        r = out.fix_rows[v]
        row = _row_tuple(*_fix_row(system, v, a))
        out.rows[r] = row
        A[r] = 0.0
        A[r, row[0]] = row[1]
        rhs[r] = row[3]
    out.rho = rho
    return out


def _row_tuple(coeffs: dict, sense: int, rhs: float):
    return (np.fromiter(coeffs.keys(), dtype=np.int64), np.fromiter(coeffs.values(), dtype=float),
            int(sense), float(rhs))


def build_ll2(ll1: LinearSystem, multi: MultiInstance) -> LinearSystem:
    sys_ = ll1.copy()
    Wm = multi.weight_matrix
    for l in range(multi.k):
        coeffs = {col: float(Wm[i, l]) for i, col in sys_.z_cols.items() if Wm[i, l] != 0}
        sys_.target_rows.append(sys_.add_row(coeffs, GE, float(multi.targets[l])))
    return sys_


def integral_from_assignment(g0, rho: PartialAssignment, system: LinearSystem) -> LpSolution:
    """Indicator solution of rho u g0 laid out in the columns of ``system``.

    ``g0`` is a full-length array; its entries on S are overwritten by rho.
    """
    if system.t_cols is None:
        raise InputError("system carries no relaxation layout")
    f = np.array(g0, dtype=np.int64).copy()
    for v, a in rho.h.items():
        f[v] = a
    x = np.zeros(system.nvars)
    if system.kind == "sat":
        x[system.t_cols] = f
    else:
        x[system.t_cols[np.arange(system.n), f]] = 1.0
    for i, col in system.z_cols.items():
        x[col] = evaluate_constraint(system.constraints[i], f)
    return LpSolution(x, system)


def relaxation(rho: PartialAssignment, multi: MultiInstance) -> LinearSystem:
    """LL2(rho) for the multi-instance."""
    return build_ll2(build_ll1(rho, multi.kind, multi), multi)


def complete_z(system: LinearSystem, t_values: np.ndarray) -> np.ndarray:
    """Point with the given t and every z raised as far as its rows allow."""
    x = np.zeros(system.nvars)
    x[system.t_cols] = t_values
    zc = np.fromiter(system.z_cols.values(), dtype=np.int64, count=len(system.z_cols))
    cap = system.hi.copy()
    if system.z_rows:
        A, sense, rhs = system.dense()
        zr = np.array(system.z_rows)
        col = np.array(system.z_row_col)
        az = A[zr, col]
        rest = A[zr] @ x  # z entries of x are still 0
        binding = ((sense[zr] == LE) & (az > 0)) | ((sense[zr] == GE) & (az < 0))
        np.minimum.at(cap, col[binding], (rhs[zr] - rest)[binding] / az[binding])
    x[zc] = np.maximum(system.lo[zc], cap[zc])
    return x


# ------------------------------------------------------------------ simplex

def solve_feasibility(system: LinearSystem, hint=None, max_iter: int | None = None) -> LpSolution | None:
    """Return any point satisfying every row within 1e-7, or None if infeasible.

    ``hint`` may be a point or a list of points; the first one that already
    satisfies the system is returned unchanged.  Otherwise a bounded-variable
    phase-1 simplex with Bland's rule decides.
    """
    if hint is not None:
        hints = [hint] if np.ndim(hint) == 1 else list(hint)
        for h in hints:
            h = np.asarray(h, dtype=float)
            if h.shape == (system.nvars,) and system.violation(h) <= FEAS_TOL:
                return LpSolution(h, system)
    A, sense, rhs = system.dense()
    x = _phase_one(A, sense, rhs, system.lo.copy(), system.hi.copy(), max_iter)
    if x is None:
        return None
    if system.violation(x) > FEAS_TOL:
        raise SolverError(f"simplex point violates the system by {system.violation(x):.2e}")
    return LpSolution(x, system)


def _presolve(A, sense, rhs, lo, hi):
    """Shrink the system before the simplex; returns None if infeasibility is evident.

    Rules, applied until nothing changes: pin variables with lo == hi, solve
    singleton equality rows, drop rows implied by the variable bounds, and fix
    a column at a bound when moving it that way never hurts any remaining row.
    Returns ``(fixed, keep_rows, lo, hi)`` with NaN marking unfixed columns.
    """
    m, nv = A.shape
    fixed = np.full(nv, np.nan)
    resid = rhs.astype(float).copy()
    rows = np.arange(m)
    cols = np.arange(nv)

    def fix(js, vals):
        nonlocal cols
        fixed[js] = vals
        resid[:] -= A[:, js] @ vals
        cols = cols[~np.isin(cols, js)]

    while True:
        pin = hi[cols] - lo[cols] <= 0
        if pin.any():
            fix(cols[pin], lo[cols[pin]])
        sub = A[np.ix_(rows, cols)]
        l, h = lo[cols], hi[cols]
        minact = np.where(sub > 0, sub * l, sub * h).sum(axis=1)
        maxact = np.where(sub > 0, sub * h, sub * l).sum(axis=1)
        sn, r = sense[rows], resid[rows]
        le, ge, eq = sn == LE, sn == GE, sn == EQ
        if np.any((le | eq) & (minact > r + FEAS_TOL)) or np.any((ge | eq) & (maxact < r - FEAS_TOL)):
            return None
        redundant = (le & (maxact <= r)) | (ge & (minact >= r)) | (eq & (minact >= r) & (maxact <= r))
        nz = sub != 0
        single = eq & ~redundant & (nz.sum(axis=1) == 1)
        changed = bool(redundant.any())
        if single.any():
            js, vals = [], []
            for i in np.nonzero(single)[0]:
                j = int(np.nonzero(nz[i])[0][0])
                col = int(cols[j])
                if col in js:
                    continue  # a second singleton on the same column is rechecked next round
                val = r[i] / sub[i, j]
                if val < lo[col] - FEAS_TOL or val > hi[col] + FEAS_TOL:
                    return None
                val = min(max(val, lo[col]), hi[col])
                lo[col] = hi[col] = val
                js.append(col)
                vals.append(val)
                redundant[i] = True
            fix(np.array(js), np.array(vals))
            changed = True
        rows = rows[~redundant]
        if changed:
            continue
        # dominated columns: every remaining row prefers the column higher (or lower)
        sgn = np.sign(sub[~redundant]) * sn[~redundant][:, None]
        in_eq = ((sub[~redundant] != 0) & eq[~redundant][:, None]).any(axis=0)
        up = ~in_eq & (sgn >= 0).all(axis=0) & np.isfinite(h)
        down = ~in_eq & (sgn <= 0).all(axis=0) & ~up
        if not (up.any() or down.any()):
            keep = np.zeros(m, dtype=bool)
            keep[rows] = True
            return fixed, keep, lo, hi
        js = np.concatenate([cols[up], cols[down]])
        fix(js, np.concatenate([h[up], l[down]]))


def _phase_one(A, sense, rhs, lo, hi, max_iter):
    if np.any(lo > hi) or np.any(~np.isfinite(lo)):
        raise InputError("phase one needs finite, consistent lower bounds")
    pre = _presolve(A, sense, rhs, lo, hi)
    if pre is None:
        return None
    fixed, keep_rows, lo, hi = pre
    free = np.isnan(fixed)
    x = np.where(free, lo, fixed)
    b = rhs - A[:, ~free] @ x[~free]
    A = A[keep_rows][:, free]
    b = b[keep_rows]
    sense = sense[keep_rows]
    lo_f, hi_f = lo[free], hi[free]
    # shift to y = x - lo >= 0
    b = b - A @ lo_f
    ub = hi_f - lo_f

    empty = ~(A != 0).any(axis=1)
    bad = empty & (((sense == LE) & (b < -FEAS_TOL)) | ((sense == GE) & (b > FEAS_TOL))
                   | ((sense == EQ) & (np.abs(b) > FEAS_TOL)))
    if bad.any():
        return None
    A, b, sense = A[~empty], b[~empty], sense[~empty]
    m, nv = A.shape
    if m == 0:
        x[free] = lo_f
        return x

    # equality form: [A | slack | art], rows normalised to b >= 0
    slack_sign = np.where(sense == LE, 1.0, np.where(sense == GE, -1.0, 0.0))
    flip = b < 0
    A = np.where(flip[:, None], -A, A)
    b = np.abs(b)
    slack_sign = np.where(flip, -slack_sign, slack_sign)
    has_slack = sense != EQ
    n_slack = int(has_slack.sum())
    need_art = slack_sign <= 0
    n_art = int(need_art.sum())
    N = nv + n_slack + n_art
    T = np.zeros((m, N))
    T[:, :nv] = A
    slack_rows = np.nonzero(has_slack)[0]
    T[slack_rows, nv + np.arange(n_slack)] = slack_sign[slack_rows]
    art_rows = np.nonzero(need_art)[0]
    T[art_rows, nv + n_slack + np.arange(n_art)] = 1.0
    upper = np.concatenate([ub, np.full(n_slack + n_art, np.inf)])
    cost = np.zeros(N)
    cost[nv + n_slack:] = 1.0

    basis = np.empty(m, dtype=np.int64)
    slack_col = np.full(m, -1)
    slack_col[slack_rows] = nv + np.arange(n_slack)
    basis[~need_art] = slack_col[~need_art]
    basis[art_rows] = nv + n_slack + np.arange(n_art)
    at_upper = np.zeros(N, dtype=bool)
    is_basic = np.zeros(N, dtype=bool)
    is_basic[basis] = True
    beta = b.copy()
    d = cost - cost[basis] @ T

    limit = max_iter or 50 * (m + N) + 1000
    for _ in range(limit):
        cand = ~is_basic & (upper > 0) & (((~at_upper) & (d < -_PIVOT_TOL)) | (at_upper & (d > _PIVOT_TOL)))
        if not cand.any():
            break
        j = int(np.argmax(cand))
        sigma = -1.0 if at_upper[j] else 1.0
        col = sigma * T[:, j]
        theta = upper[j]
        leave = -1
        ub_b = upper[basis]
        with np.errstate(divide="ignore", invalid="ignore"):
            dec = col > _PIVOT_TOL
            inc = (col < -_PIVOT_TOL) & np.isfinite(ub_b)
            ratio = np.full(m, np.inf)
            ratio[dec] = beta[dec] / col[dec]
            ratio[inc] = (ub_b[inc] - beta[inc]) / (-col[inc])
        ratio = np.maximum(ratio, 0.0)
        rmin = ratio.min()
        if rmin < theta:
            ties = np.nonzero(ratio <= rmin + 1e-12)[0]
            leave = int(ties[np.argmin(basis[ties])])
            theta = rmin
        if not np.isfinite(theta):
            raise SolverError("phase-one objective unbounded (numerical breakdown)")
        beta = beta - theta * col
        if leave < 0:
            at_upper[j] = not at_upper[j]
            continue
        out = basis[leave]
        to_upper = col[leave] < 0
        enter_val = (upper[j] if at_upper[j] else 0.0) + sigma * theta
        beta[leave] = enter_val
        piv = T[leave, j]
        T[leave] /= piv
        colj = T[:, j].copy()
        colj[leave] = 0.0
        T -= np.outer(colj, T[leave])
        d = d - d[j] * T[leave]
        is_basic[out] = False
        is_basic[j] = True
        at_upper[j] = False
        basis[leave] = j
        at_upper[out] = bool(to_upper)
        if out >= nv + n_slack:
            upper[out] = 0.0  # artificial left the basis; never re-enters
            at_upper[out] = False
    else:
        raise SolverError(f"phase-one simplex exceeded {limit} iterations")

    y = np.where(at_upper, upper, 0.0)
    y[~np.isfinite(y)] = 0.0
    y[basis] = beta
    infeas = float(y[nv + n_slack:].sum())
    if infeas > FEAS_TOL:
        return None
    # recompute the basic values from the original rows to shed pivot drift
    full = np.zeros((m, N))
    full[:, :nv] = A
    full[slack_rows, nv + np.arange(n_slack)] = slack_sign[slack_rows]
    full[art_rows, nv + n_slack + np.arange(n_art)] = 1.0
    nonbasic = ~is_basic
    try:
        y_b = np.linalg.solve(full[:, basis], b - full[:, nonbasic] @ y[nonbasic])
        y[basis] = y_b
    except np.linalg.LinAlgError:
        pass
    y_vars = np.clip(y[:nv], 0.0, ub)
    x[free] = lo_f + y_vars
    return x


# ------------------------------------------------------- smoothing, sampling

def smooth_boolean(sol: LpSolution) -> ProductDistribution:
    t = np.clip(sol.t, 0.0, 1.0)
    if t.ndim != 1:
        raise InputError("smooth_boolean expects a Boolean (sat) relaxation")
    return ProductDistribution.boolean(0.25 + t / 2.0)


def smooth_qary(sol: LpSolution, q: int, w: int) -> ProductDistribution:
    t = np.clip(sol.t, 0.0, 1.0)
    if t.ndim != 2 or t.shape[1] != q:
        raise InputError("smooth_qary expects a q-ary (conj) relaxation")
    t = t / t.sum(axis=1, keepdims=True)
    return ProductDistribution((w - 1) / (q * w) + t / w)


def round_sample(p: ProductDistribution, rng, rho: PartialAssignment | None = None) -> np.ndarray:
    """Sample every free variable independently; returns the full assignment rho u g."""
    rho = rho or PartialAssignment()
    hv = rho.as_array(p.n)
    free = np.nonzero(hv < 0)[0]
    u = rng.random(len(free))
    cdf = np.cumsum(p.probs[free], axis=1)
    cdf[:, -1] = 1.0
    g = hv.copy()
    g[free] = (u[:, None] >= cdf).sum(axis=1)
    return g
