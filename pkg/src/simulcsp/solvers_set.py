"""Set-based algorithms: simultaneous MaxCut and simultaneous Max-w-SAT.

Both grow one influential set S by repeatedly taking the heaviest variable of
a high-variance instance, then try every assignment h to S on top of a random
completion g.  MaxCut rounds uniformly; w-SAT rounds through the smoothed LP
solution of each candidate restriction h0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import MultiInstance, PartialAssignment, active_degree_total, ratios
from .enumeration import DEFAULT_BUDGET, Enumerator, assignments
from .errors import InputError, InvariantViolation, ResourceError
from .estimators import Params, find_heavy_variable, high_variance, meanest, varest
from .lp import FEAS_TOL, build_ll1, build_ll2, complete_z, refix, round_sample, smooth_boolean, solve_feasibility

MAXCUT_FACTOR = 0.5
WSAT_FACTOR = 0.25


def _json_safe(x):
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, np.ndarray):
        return _json_safe(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


@dataclass
class SolveReport:
    algorithm: str
    assignment: list
    per_instance_values: list
    ratios: list
    objective: float
    targets: list
    params: dict
    eps: float
    seed: int | None
    flags: dict = field(default_factory=dict)
    trace: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _json_safe({
            "algorithm": self.algorithm,
            "assignment": self.assignment,
            "per_instance_values": self.per_instance_values,
            "ratios": self.ratios,
            "objective": self.objective,
            "targets": self.targets,
            "params": self.params,
            "eps": self.eps,
            "seed": self.seed,
            "flags": self.flags,
            "trace": self.trace,
        })

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "SolveReport":
        def num(x):
            return float(x) if isinstance(x, str) else x
        return cls(d["algorithm"], list(d["assignment"]), list(d["per_instance_values"]),
                   [num(r) for r in d["ratios"]], num(d["objective"]), list(d["targets"]),
                   dict(d["params"]), d["eps"], d["seed"], dict(d.get("flags", {})), dict(d.get("trace", {})))


def make_report(algorithm, multi: MultiInstance, f, params: Params, eps, seed, flags, trace) -> SolveReport:
    f = np.asarray(f, dtype=np.int64)
    values = multi.values(f[None, :])[0]
    r = ratios(values, multi.targets)
    return SolveReport(algorithm, f.tolist(), values.tolist(), r.tolist(), float(r.min()),
                       multi.targets.tolist(), params.to_dict(), float(eps), seed, flags, trace)


# ---------------------------------------------------------------- parameters

def _check_eps(eps: float) -> None:
    if not 0 < eps <= 0.4:
        raise InputError(f"eps must lie in (0, 2/5], got {eps}")


def default_params_maxcut(k: int, eps: float) -> Params:
    _check_eps(eps)
    if k < 1:
        raise InputError("k must be at least 1")
    delta0 = 1 / (10 * k)
    eps0 = eps / 2
    gamma = eps0 ** 2 * delta0 / 16
    t = math.ceil(2 * k / gamma * math.log(11 / gamma))
    return Params(delta0, eps0, gamma, t, alpha=0.5)


def default_params_wsat(k: int, eps: float, w: int) -> Params:
    _check_eps(eps)
    if k < 1 or w < 1:
        raise InputError("k and w must be at least 1")
    delta0 = 1 / (10 * k)
    eps0 = eps / 2
    gamma = eps0 ** 2 * delta0 / (16 * w ** 2)
    t = math.ceil(2 * k / gamma * math.log(11 / gamma))
    return Params(delta0, eps0, gamma, t)


def resolve_params(default_fn, override) -> Params:
    """Default schedule, optionally with some fields replaced.

    ``override`` is None, a complete :class:`Params`, or a dict of fields.
    """
    if isinstance(override, Params):
        return replace(override, schedule="override")
    if not override:
        return default_fn()
    unknown = set(override) - {"delta0", "eps0", "gamma", "t", "alpha"}
    if unknown:
        raise InputError(f"unknown parameter override(s): {sorted(unknown)}")
    if any(v is not None and v <= 0 for v in override.values()):
        raise InputError("parameter overrides must be positive")
    return replace(default_fn(), **{k: v for k, v in override.items() if v is not None}, schedule="override")


# ---------------------------------------------------------- influential set

@dataclass
class GrowResult:
    S: list
    cnt: np.ndarray
    trace: dict


def grow_set(multi: MultiInstance, params: Params, factor: float, degree_cap: float) -> GrowResult:
    """Steps 1-3 of the set algorithms (bring heavy variables into S).

    ``degree_cap`` is the largest possible initial total active degree (2 for
    cut, w for w-SAT) used by the early-variables bound.
    """
    k, t = multi.k, params.t
    S: list[int] = []
    cnt = np.zeros(k, dtype=np.int64)
    order, cnt_hist, flag_hist = [], [], []
    gamma_checks = 0
    while True:
        flags = [high_variance(varest(W, S), meanest(W, S, factor), params) for W in multi.instances]
        flag_hist.append(flags)
        eligible = [l for l in range(k) if flags[l] and cnt[l] < t]
        if not eligible:
            break
        l = eligible[0]
        v = find_heavy_variable(S, multi.instances[l], params.gamma, check=True)
        gamma_checks += 1
        S.append(v)
        cnt[l] += 1
        order.append([v, l])
        cnt_hist.append(cnt.tolist())
        if len(S) > t * k:
            raise InvariantViolation(f"influential-set loop ran {len(S)} > t*k = {t * k} iterations")
    for l in range(k):
        if cnt[l] == t:
            bound = degree_cap * (1 - params.gamma) ** t
            got = active_degree_total(S, multi.instances[l])
            if got > bound + 1e-9:
                raise InvariantViolation(
                    f"instance {l}: active degree {got:.3e} after t={t} steps exceeds {bound:.3e}")
    trace = {
        "S_order": order,
        "cnt_history": cnt_hist,
        "flag_history": flag_hist,
        "iterations": len(S),
        "final_cnt": cnt.tolist(),
        "t": int(t),
        "gamma_checks": gamma_checks,
        "high_variance": [int(l) for l in range(k) if cnt[l] == t],
    }
    return GrowResult(S, cnt, trace)


# ------------------------------------------------------------------- solvers

def _require(multi: MultiInstance, kind: str) -> None:
    if multi.kind != kind:
        raise InputError(f"expected a {kind} multi-instance, got {multi.kind}")


def solve_maxcut(multi: MultiInstance, eps: float = 0.3, params_override=None, seed: int | None = 0,
                 budget: int = DEFAULT_BUDGET) -> SolveReport:
    _require(multi, "cut")
    params = resolve_params(lambda: default_params_maxcut(multi.k, eps), params_override)
    grown = grow_set(multi, params, MAXCUT_FACTOR, 2.0)
    enum = _enumerator(multi, grown, budget)
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % 2 ** 63)
    rng = np.random.default_rng(seed)
    g = rng.integers(0, 2, size=multi.n)
    best = enum.best([g])
    trace = dict(grown.trace, S_size=len(grown.S), enumerated=best.evaluated)
    return make_report("maxcut", multi, best.assignment, params, eps, seed, {}, trace)


def _enumerator(multi, grown: GrowResult, budget) -> Enumerator:
    try:
        return Enumerator(multi, grown.S, budget)
    except ResourceError as e:
        e.partial = grown.trace
        raise


def _screen_weights(k: int) -> np.ndarray:
    """Nonnegative combinations of the target rows used by the LP screen."""
    rows = list(np.eye(k))
    if k > 1:
        rows.append(np.full(k, 1.0 / k))
        for a in range(k):
            for b in range(a + 1, k):
                for lam in (0.25, 0.5, 0.75):
                    r = np.zeros(k)
                    r[a], r[b] = lam, 1 - lam
                    rows.append(r)
    return np.array(rows)


def wsat_lp_upper_bounds(multi: MultiInstance, S, H: np.ndarray) -> np.ndarray:
    """Upper bounds on max over LL2(h0) of sum_l lam_l sum_C W_l(C) z_C, one row per h0.

    Returns an array (len(H), n_lam) for the combinations of
    :func:`_screen_weights`.  A clause already satisfied on S, or with two or
    more free literals, is credited fully; a clause whose only hope is one free
    literal is bounded by t_v or 1 - t_v, and the two polarities on the same
    variable share a budget of 1.  If a bound falls below lam . c, LL2(h0) is
    infeasible (sound screen; feasible systems are never rejected).
    """
    arr, Wm = multi.arrays, multi.weight_matrix
    lams = _screen_weights(multi.k)
    Wl = Wm @ lams.T  # (m, n_lam)
    S = np.asarray(S, dtype=np.int64)
    in_s = np.isin(arr.vars, S) & arr.mask
    nfree = (arr.mask & ~in_s).sum(axis=1)
    X = np.zeros((len(H), multi.n), dtype=np.int64)
    X[:, S] = H
    sat_s = ((X[:, np.where(arr.mask, arr.vars, 0)] == arr.vals) & in_s).any(axis=2)
    bound = (sat_s | (nfree >= 2)).astype(float) @ Wl
    unit = np.nonzero(nfree == 1)[0]
    if len(unit):
        slot = np.argmax(arr.mask[unit] & ~in_s[unit], axis=1)
        uv = arr.vars[unit, slot]
        pos = arr.vals[unit, slot] == 1
        live = (~sat_s[:, unit]).astype(float)
        onehot = np.zeros((len(unit), multi.n))
        onehot[np.arange(len(unit)), uv] = 1.0
        for j in range(len(lams)):
            P = live @ (onehot * (Wl[unit, j] * pos)[:, None])
            N = live @ (onehot * (Wl[unit, j] * ~pos)[:, None])
            bound[:, j] += np.maximum(P, N).sum(axis=1)
    return bound


def solve_wsat(multi: MultiInstance, eps: float = 0.3, params_override=None, seed: int | None = 0,
               budget: int = DEFAULT_BUDGET) -> SolveReport:
    _require(multi, "sat")
    params = resolve_params(lambda: default_params_wsat(multi.k, eps, multi.w), params_override)
    grown = grow_set(multi, params, WSAT_FACTOR, float(multi.w))
    enum = _enumerator(multi, grown, budget)
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % 2 ** 63)
    rng = np.random.default_rng(seed)
    S = grown.S
    template = build_ll2(build_ll1(PartialAssignment({v: 0 for v in S}), "sat", multi), multi)
    t_last = None
    t_half = np.full(multi.n, 0.5)
    H = assignments(2, len(S))
    rejected = (wsat_lp_upper_bounds(multi, S, H) < _screen_weights(multi.k) @ multi.targets - FEAS_TOL).any(axis=1)
    completions, lp_feasible, hint_hits = [], 0, 0
    for h0, skip in zip(H, rejected):
        if skip:
            continue
        rho = PartialAssignment(dict(zip(S, h0.tolist())))
        system = refix(template, rho)
        hints = []
        for t0 in ([t_last] if t_last is not None else []) + [t_half]:
            t0 = t0.copy()
            t0[S] = h0
            hints.append(complete_z(system, t0))
        sol = solve_feasibility(system, hint=hints)
        if sol is None:
            continue
        lp_feasible += 1
        hint_hits += any(sol.x is h for h in hints)
        t_last = np.clip(sol.t, 0.0, 1.0)
        completions.append(round_sample(smooth_boolean(sol), rng, rho))
    flags = {}
    if not completions:
        flags["targets_infeasible"] = True
        completions.append(rng.integers(0, 2, size=multi.n))
    best = enum.best(completions)
    trace = dict(grown.trace, S_size=len(S), lp_feasible=lp_feasible, lp_infeasible=enum.size - lp_feasible,
                 lp_screened=int(rejected.sum()),
                 lp_hint_hits=hint_hits, enumerated=best.evaluated, best_completion=int(best.g_index))
    return make_report("wsat", multi, best.assignment, params, eps, seed, flags, trace)
