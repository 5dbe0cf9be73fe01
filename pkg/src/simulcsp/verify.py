"""Ground-truth oracles and lemma checkers.

Exhaustive search gives exact Pareto and max-min optima on small inputs;
``brute_force_moments`` enumerates every completion to produce the exact
distribution of the active contribution Y; ``perturb`` runs the perturbation
procedure from the MaxCut analysis as an executable witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Cut,
    Instance,
    MultiInstance,
    PartialAssignment,
    active_degree_total,
    active_mask,
    ratios,
    value,
)
from .enumeration import assignments
from .errors import InputError, ResourceError
from .estimators import ProductDistribution

ORACLE_BUDGET = 2 ** 24
_CHUNK = 2 ** 16


@dataclass
class OracleResult:
    best_assignment: np.ndarray
    best_min_ratio: float
    per_instance_values: np.ndarray
    opt: float | None = None


def brute_force_pareto(multi: MultiInstance, budget: int = ORACLE_BUDGET) -> OracleResult:
    """Exact argmax of min_l val/c_l; ties go to the lexicographically smallest assignment."""
    q, n = multi.q, multi.n
    if q ** n > budget:
        raise ResourceError(f"{q}^{n} assignments exceed the oracle budget of {budget}")
    best, best_idx, best_vals = -np.inf, 0, None
    for a in range(0, q ** n, _CHUNK):
        X = assignments(q, n, a, min(a + _CHUNK, q ** n))
        vals = multi.values(X)
        obj = ratios(vals, multi.targets).min(axis=1)
        j = int(np.argmax(obj))
        if obj[j] > best:
            best, best_idx, best_vals = float(obj[j]), a + j, vals[j]
    f = assignments(q, n, best_idx, best_idx + 1)[0]
    return OracleResult(f, best, best_vals)


def brute_force_opt_min(instances, budget: int = ORACLE_BUDGET) -> float:
    """max over f of min_l val(f, W_l)."""
    if isinstance(instances, MultiInstance):
        instances = instances.instances
    res = brute_force_pareto(MultiInstance(list(instances), [1.0] * len(instances)), budget)
    return res.best_min_ratio


def brute_force_moments(rho: PartialAssignment, p: ProductDistribution, W: Instance,
                        budget: int = 2 ** 20) -> tuple[float, float]:
    """Exact E[Y] and Var[Y] by enumerating all completions of rho."""
    hv = rho.as_array(W.n)
    free = np.nonzero(hv < 0)[0]
    if W.q ** len(free) > budget:
        raise ResourceError("too many completions for the exhaustive moment oracle")
    act = active_mask(rho, W)
    G = assignments(W.q, len(free))
    X = np.tile(hv, (len(G), 1))
    X[:, free] = G
    Y = (W.arrays.satisfied(X) & act).astype(float) @ W.weights
    logp = np.log(np.maximum(p.probs[free[None, :], G], 1e-300)).sum(axis=1) if len(free) else np.zeros(1)
    prob = np.exp(logp)
    zero = (p.probs[free[None, :], G] == 0).any(axis=1) if len(free) else np.zeros(1, dtype=bool)
    prob[zero] = 0.0
    mean = float(prob @ Y)
    return mean, float(prob @ (Y - mean) ** 2)


def sample_completions(rho: PartialAssignment, p: ProductDistribution, trials: int, rng) -> np.ndarray:
    """(trials, n) independent roundings of the free variables of rho."""
    hv = rho.as_array(p.n)
    free = np.nonzero(hv < 0)[0]
    X = np.tile(hv, (trials, 1))
    if len(free):
        cdf = np.cumsum(p.probs[free], axis=1)
        cdf[:, -1] = 1.0
        u = rng.random((trials, len(free)))
        X[:, free] = (u[:, :, None] >= cdf[None, :, :]).sum(axis=2)
    return X


def monte_carlo_mean_var(rho, p: ProductDistribution, W: Instance, trials: int = 10_000,
                         seed: int | None = 0) -> tuple[float, float, float]:
    """Sample mean, sample variance and standard error of Y."""
    if trials < 2:
        raise InputError("need at least two trials")
    rho = rho if isinstance(rho, PartialAssignment) else PartialAssignment(rho)
    rng = np.random.default_rng(seed)
    act = active_mask(rho, W)
    total = np.empty(trials)
    for a in range(0, trials, _CHUNK):
        b = min(a + _CHUNK, trials)
        X = sample_completions(rho, p, b - a, rng)
        total[a:b] = (W.arrays.satisfied(X) & act).astype(float) @ W.weights
    var = float(total.var(ddof=1))
    return float(total.mean()), var, math.sqrt(var / trials)


@dataclass
class CheckResult:
    passed: bool
    min_ratio: float
    threshold: float
    values_match: bool
    failures: list = field(default_factory=list)


def check_solution(report, multi: MultiInstance, alpha: float, eps: float) -> CheckResult:
    """Recompute the report's values and test val_l >= (alpha - eps) c_l for every l."""
    f = np.asarray(report.assignment, dtype=np.int64)
    vals = np.array([value(f, W) for W in multi.instances])
    claimed = np.asarray(report.per_instance_values, dtype=float)
    match = claimed.shape == vals.shape and bool(np.allclose(claimed, vals, atol=1e-9, rtol=0))
    thr = alpha - eps
    failures = []
    for l, (v, c) in enumerate(zip(vals, multi.targets)):
        if v < thr * c - 1e-9:
            failures.append({"instance": l, "value": float(v), "needed": float(thr * c)})
        elif abs(claimed[l] - v) > 1e-9 if l < len(claimed) else True:
            failures.append({"instance": l, "value": float(v), "reported": float(claimed[l]) if l < len(claimed) else None})
    r = ratios(vals, multi.targets)
    return CheckResult(not failures and match, float(r.min()), thr, match, failures)


# ------------------------------------------------------------------ Perturb

@dataclass
class PerturbResult:
    ok: bool
    h: dict
    specials: dict = field(default_factory=dict)
    B_sizes: list = field(default_factory=list)
    message: str = ""


def _incident_satisfied(f, W: Instance) -> np.ndarray:
    """Per variable: weight of satisfied constraints containing it."""
    sat = W.arrays.satisfied(f[None, :])[0]
    out = np.zeros(W.n)
    rows, cols = np.nonzero(W.arrays.mask & sat[:, None])
    np.add.at(out, W.arrays.vars[rows, cols], W.weights[rows])
    return out


def perturb(h_star, g, S_star, multi: MultiInstance, trace: dict, eps: float,
            t: int | None = None) -> PerturbResult:
    """Edit h* at one special variable per high-variance instance (cnt_l = t).

    ``h_star`` maps S* to values, ``g`` is a full-length assignment whose
    entries outside S* are used, ``trace['S_order']`` lists ``[variable,
    instance]`` pairs in inclusion order and ``trace['final_cnt']`` the
    counters; ``t`` defaults to ``trace['t']``.  Applies to cut and sat
    instances.
    """
    if multi.kind not in ("cut", "sat"):
        raise InputError("perturb applies to cut and sat instances")
    S_star = [int(v) for v in S_star]
    h = {int(v): int(a) for v, a in dict(h_star).items()}
    if set(h) != set(S_star):
        raise InputError("h_star must assign exactly the variables of S_star")
    f = np.asarray(g, dtype=np.int64).copy()
    for v, a in h.items():
        f[v] = a
    if t is None:
        if "t" not in trace:
            raise InputError("t must be given or recorded in the trace")
        t = int(trace["t"])
    k = multi.k
    cnt = trace["final_cnt"]
    order = trace["S_order"]
    in_s = np.zeros(multi.n, dtype=bool)
    in_s[S_star] = True
    specials: dict[int, int] = {}
    B_sizes = []
    for l in range(k):
        if cnt[l] != t:
            continue
        B = set()
        for W in multi.instances:
            inc = _incident_satisfied(f, W)
            B |= set(np.nonzero(inc >= eps / (2 * k) * value(f, W))[0].tolist())
        B_sizes.append(len(B))
        if not t / 2 > len(B) + k:
            return PerturbResult(False, h, specials, B_sizes,
                                 f"precondition t/2 > |B| + k fails for instance {l}: t={t}, |B|={len(B)}, k={k}")
        U = [v for v, src in order if src == l][: t // 2]
        cand = [u for u in U if u not in B and u not in specials.values()]
        if not cand:
            return PerturbResult(False, h, specials, B_sizes, f"no admissible special variable for instance {l}")
        u = cand[0]
        specials[l] = u
        W = multi.instances[l]
        arr = W.arrays
        inside = (~arr.mask | in_s[np.where(arr.mask, arr.vars, 0)]).all(axis=1)
        touches = (arr.vars == u).any(axis=1)
        sel = inside & touches
        gains = []
        for a in range(multi.q):
            f2 = f.copy()
            f2[u] = a
            gains.append(float(arr.satisfied(f2[None, :])[0][sel] @ W.weights[sel]))
        best = int(np.argmax(gains))
        if gains[best] > gains[f[u]]:
            f[u] = best
            h[u] = best
    return PerturbResult(True, h, specials, B_sizes, "")


def perturb_fixture(r: int = 4, eps: float = 0.4, b: float = 0.01):
    """High-variance MaxCut fixture: a heavy uncut 2r-cycle inside S* and one light free edge.

    Returns ``(multi, h_star, g, S_star, trace, eps, t)`` with t = 2r and every
    S* variable brought in for instance 0.
    """
    t = 2 * r
    n = t + 2
    a = (1 - b) / t
    edges = [(Cut(i, (i + 1) % t), a) for i in range(t)] + [(Cut(t, t + 1), b)]
    W = Instance("cut", n, edges)
    multi = MultiInstance([W], [1.0])
    S_star = list(range(t))
    h_star = {v: 0 for v in S_star}
    g = np.zeros(n, dtype=np.int64)
    g[t + 1] = 1
    trace = {"S_order": [[v, 0] for v in S_star], "final_cnt": [t], "t": t}
    return multi, h_star, g, S_star, trace, eps, t


def perturbation_effect(result: PerturbResult, h_star, g, multi: MultiInstance, S_star, eps: float) -> dict:
    """Both clauses of the perturbation-effect statement, evaluated directly."""
    f0 = np.asarray(g, dtype=np.int64).copy()
    f1 = f0.copy()
    for v, a in dict(h_star).items():
        f0[v] = a
    for v, a in result.h.items():
        f1[v] = a
    before = [value(f0, W) for W in multi.instances]
    after = [value(f1, W) for W in multi.instances]
    keep = all(a >= (1 - eps / 2) * b - 1e-9 for a, b in zip(after, before))
    heavy = {}
    for l in result.specials:
        deg = active_degree_total(S_star, multi.instances[l])
        heavy[l] = {"value": after[l], "activedeg": deg, "ok": after[l] >= 4 * deg - 1e-9}
    return {"before": before, "after": after, "keeps_value": keep,
            "high_variance": heavy, "ok": keep and all(x["ok"] for x in heavy.values())}


# ------------------------------------------------------- rounding lemmas

ROUNDING_FACTORS = {"sat": 0.75, "max2and": 0.5}


def rounding_factor(kind: str, q: int, w: int) -> float:
    """Per-constraint guarantee of the smooth rounding: E[C] >= factor * z_C."""
    if kind == "sat":
        return ROUNDING_FACTORS["sat"]
    if kind == "conj":
        return 1.0 / q ** (w - 1)
    raise InputError(f"no LP rounding for kind {kind!r}")


def random_ll1_point(multi: MultiInstance, rho: PartialAssignment, rng):
    """A random feasible LL1 point: random t (consistent with rho), every z at its cap."""
    from .lp import LpSolution, build_ll1, complete_z

    system = build_ll1(rho, multi.kind, multi)
    if multi.kind == "sat":
        t = rng.random(multi.n)
        for v, a in rho.h.items():
            t[v] = a
    else:
        t = rng.dirichlet(np.ones(multi.q), size=multi.n)
        for v, a in rho.h.items():
            t[v] = 0.0
            t[v, a] = 1.0
    return LpSolution(complete_z(system, t), system)


def rounding_check(multi: MultiInstance, rho: PartialAssignment, sol) -> list[dict]:
    """Exact expected value under the smoothed rounding versus factor * sum W z, per instance."""
    from .estimators import meancalc
    from .lp import smooth_boolean, smooth_qary
    from .core import val_partial

    if multi.kind == "sat":
        p = smooth_boolean(sol)
    else:
        p = smooth_qary(sol, multi.q, multi.w)
    factor = rounding_factor(multi.kind, multi.q, multi.w)
    z = np.zeros(multi.arrays.m)
    for i, col in sol.system.z_cols.items():
        z[i] = sol.x[col]
    out = []
    for l, W in enumerate(multi.instances):
        expect = val_partial(rho, W) + meancalc(rho, p, W)
        bound = factor * float(z @ multi.weight_matrix[:, l])
        out.append({"instance": l, "expected": expect, "bound": bound, "ok": expect >= bound - 1e-9})
    return out


# ------------------------------------------------------- concentration

def concentration_check(rho: PartialAssignment, p: ProductDistribution, W: Instance, eps0: float,
                        delta0: float, trials: int, rng) -> dict:
    """Empirical Pr[Y < (1 - eps0) E[Y]] against delta0 plus three binomial standard errors."""
    from .estimators import meancalc

    mean = meancalc(rho, p, W)
    act = active_mask(rho, W)
    X = sample_completions(rho, p, trials, rng)
    Y = (W.arrays.satisfied(X) & act).astype(float) @ W.weights
    freq = float(np.mean(Y < (1 - eps0) * mean))
    allowed = delta0 + 3 * math.sqrt(delta0 * (1 - delta0) / trials)
    return {"mean": mean, "frequency": freq, "allowed": allowed, "ok": freq <= allowed}


def low_variance_configuration(rng, kind: str, params, n: int = 2400, m: int = 600,
                               max_tries: int = 100):
    """Random sparse instance, S and h with varest < delta0 eps0^2 meanest^2.

    Returns ``(W, rho, p)``; cut uses the uniform distribution, sat a random
    smooth one with marginals in [1/4, 3/4].
    """
    from .core import Clause
    from .estimators import high_variance, meanest, varest

    factor = 0.5 if kind == "cut" else 0.25
    for _ in range(max_tries):
        cons = []
        for _ in range(m):
            vs = rng.choice(n, size=2, replace=False)
            wt = float(rng.uniform(0.5, 1.0))
            if kind == "cut":
                cons.append((Cut(int(vs[0]), int(vs[1])), wt))
            else:
                cons.append((Clause(tuple((int(v), bool(rng.integers(2))) for v in vs)), wt))
        W = Instance(kind, n, cons)
        W = Instance(kind, n, [(c, wt / W.total_weight) for c, wt in W.weight_map().items()])
        S = rng.choice(n, size=int(rng.integers(0, 20)), replace=False).tolist()
        if high_variance(varest(W, S), meanest(W, S, factor), params):
            continue
        rho = PartialAssignment({int(v): int(rng.integers(2)) for v in S})
        if kind == "cut":
            p = ProductDistribution.uniform(n)
        else:
            p = ProductDistribution.boolean(rng.uniform(0.25, 0.75, size=n))
        return W, rho, p
    raise ResourceError("no low-variance configuration found; use a sparser instance")
