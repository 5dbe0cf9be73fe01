import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from simulcsp.core import Clause, Cut, Instance, MultiInstance, PartialAssignment, ratios, value
from simulcsp.enumeration import Enumerator, assignments
from simulcsp.errors import InputError, ResourceError
from simulcsp.estimators import Params
from simulcsp.gen import random_planted
from simulcsp.solvers_set import (
    SolveReport,
    default_params_maxcut,
    default_params_wsat,
    _screen_weights,
    grow_set,
    resolve_params,
    solve_maxcut,
    solve_wsat,
    wsat_lp_upper_bounds,
)
from simulcsp.verify import brute_force_pareto, check_solution, random_ll1_point

from .conftest import random_instance


# ------------------------------------------------------------- enumeration

def test_assignments_lexicographic():
    assert assignments(2, 2).tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    assert assignments(3, 2, 4, 6).tolist() == [[1, 1], [1, 2]]


@given(st.integers(0, 2 ** 31), st.sampled_from([("cut", 2, 2), ("sat", 2, 3), ("conj", 3, 2)]))
def test_enumerator_matches_direct_search(seed, shape):
    kind, q, w = shape
    rng = np.random.default_rng(seed)
    n = 7
    Ws = [random_instance(rng, kind, n, 6, q=q, w=w) for _ in range(2)]
    multi = MultiInstance(Ws, rng.uniform(0.2, 1.0, size=2).tolist())
    S = rng.choice(n, size=int(rng.integers(0, 5)), replace=False)
    G = [rng.integers(0, q, size=n) for _ in range(3)]
    best = Enumerator(multi, S).best(G)
    # direct: first maximum over (g, h) in order
    top, arg = -np.inf, None
    for gi, g in enumerate(G):
        for hi, h in enumerate(assignments(q, len(S))):
            f = g.copy()
            f[S] = h
            o = ratios(multi.values(f[None, :])[0], multi.targets).min()
            if o > top + 1e-12:
                top, arg = o, (gi, hi)
    assert best.objective == pytest.approx(top, abs=1e-9)
    assert (best.g_index, best.h_index) == arg


def test_enumerator_budget():
    W = Instance("cut", 30, [(Cut(i, i + 1), 1.0) for i in range(29)])
    with pytest.raises(ResourceError) as e:
        Enumerator(MultiInstance([W], [1.0]), range(27), budget=2 ** 26)
    assert e.value.partial["S"] == list(range(27))


# ---------------------------------------------------------------- schedules

def test_default_params_maxcut_examples():
    P = default_params_maxcut(1, 0.4)
    assert (P.delta0, P.eps0) == pytest.approx((0.1, 0.2))
    assert P.gamma == pytest.approx(2.5e-4)
    assert P.alpha == 0.5
    assert default_params_maxcut(2, 0.4).delta0 == pytest.approx(0.05)
    with pytest.raises(InputError):
        default_params_maxcut(1, 0.5)
    with pytest.raises(InputError):
        default_params_maxcut(1, 0.0)


@given(st.integers(1, 6), st.floats(0.01, 0.4), st.integers(1, 4))
def test_schedule_algebra(k, eps, w):
    P = default_params_maxcut(k, eps)
    assert P.gamma * P.t >= 2 * k * math.log(11 / P.gamma) - 1e-9
    Q = default_params_wsat(k, eps, w)
    assert Q.gamma == pytest.approx(P.gamma / w ** 2)
    assert isinstance(Q.t, int) and Q.t >= 1


def test_default_params_wsat_example():
    assert default_params_wsat(1, 0.4, 2).gamma == pytest.approx(6.25e-5)


def test_resolve_params_override():
    P = resolve_params(lambda: default_params_maxcut(2, 0.3), {"t": 6})
    assert P.t == 6 and P.schedule == "override"
    assert resolve_params(lambda: default_params_maxcut(2, 0.3), None).schedule == "default"
    with pytest.raises(InputError):
        resolve_params(lambda: default_params_maxcut(2, 0.3), {"tau": 1})
    with pytest.raises(InputError):
        resolve_params(lambda: default_params_maxcut(2, 0.3), {"t": -1})
    full = Params(0.1, 0.1, 0.01, 3)
    assert resolve_params(lambda: default_params_maxcut(2, 0.3), full).t == 3


# ----------------------------------------------------------------- MaxCut

def test_maxcut_single_edge():
    multi = MultiInstance([Instance("cut", 2, [(Cut(0, 1), 1.0)])], [1.0])
    r = solve_maxcut(multi, 0.3, {"t": 4})
    assert r.objective == 1.0
    assert r.assignment[0] != r.assignment[1]


def test_maxcut_zero_targets_inf():
    W = Instance("cut", 3, [(Cut(0, 1), 1.0)])
    r = solve_maxcut(MultiInstance([W, W], [0.0, 0.0]), 0.3, {"t": 2})
    assert math.isinf(r.objective)
    assert json_roundtrip(r).objective == r.objective


def json_roundtrip(r):
    import json
    return SolveReport.from_dict(json.loads(r.to_json()))


def test_maxcut_rejects_other_kinds():
    W = Instance("sat", 2, [(Clause(((0, True),)), 1.0)])
    with pytest.raises(InputError):
        solve_maxcut(MultiInstance([W], [1.0]))


@pytest.mark.parametrize("seed", range(5))
def test_maxcut_report_invariants(seed):
    b = random_planted("cut", 12, 2, m_per_instance=20, seed=seed)
    r = solve_maxcut(b.multi, 0.3, {"t": 4}, seed=seed)
    assert r.trace["iterations"] <= 4 * 2
    assert r.trace["gamma_checks"] == r.trace["iterations"]
    for l, W in enumerate(b.multi.instances):
        assert r.per_instance_values[l] == pytest.approx(value(r.assignment, W), abs=1e-9)
    assert check_solution(r, b.multi, 0.0, 0.0).values_match
    oracle = brute_force_pareto(b.multi)
    assert oracle.best_min_ratio >= r.objective - 1e-9
    assert r.params["schedule"] == "override"


def test_maxcut_deterministic():
    b = random_planted("cut", 20, 2, m_per_instance=30, seed=4)
    a = solve_maxcut(b.multi, 0.3, {"t": 5}, seed=9).to_json()
    assert a == solve_maxcut(b.multi, 0.3, {"t": 5}, seed=9).to_json()


def test_grow_set_trace_consistent():
    b = random_planted("cut", 30, 2, m_per_instance=40, seed=1)
    P = resolve_params(lambda: default_params_maxcut(2, 0.3), {"t": 5})
    grown = grow_set(b.multi, P, 0.5, 2.0)
    order = grown.trace["S_order"]
    assert [v for v, _ in order] == grown.S
    assert len(set(grown.S)) == len(grown.S)
    counts = np.bincount([l for _, l in order], minlength=2)
    assert counts.tolist() == grown.trace["final_cnt"]


# ------------------------------------------------------------------- w-SAT

def test_wsat_single_unit_clause():
    W = Instance("sat", 3, [(Clause(((1, False),)), 1.0)], w=1)
    r = solve_wsat(MultiInstance([W], [1.0]), 0.3, {"t": 2})
    assert r.objective == 1.0 and r.assignment[1] == 0


def test_wsat_infeasible_targets_flagged():
    W = Instance("sat", 4, [(Clause(((0, True), (1, True))), 0.5), (Clause(((2, False), (3, True))), 0.5)])
    r = solve_wsat(MultiInstance([W], [1.5]), 0.3, {"t": 2})
    assert r.flags.get("targets_infeasible") is True
    assert r.objective <= 1 / 1.5 + 1e-12


@given(st.integers(0, 2 ** 31))
def test_wsat_screen_is_sound(seed):
    """Every LL1 point with S pinned to h0 scores below the screen bound for h0."""
    rng = np.random.default_rng(seed)
    Ws = [random_instance(rng, "sat", 6, 6, w=2) for _ in range(2)]
    multi = MultiInstance(Ws, [0.0, 0.0])
    S = rng.choice(6, size=3, replace=False).tolist()
    H = assignments(2, 3)
    bound = wsat_lp_upper_bounds(multi, S, H)
    lams = _screen_weights(2)
    assert bound.shape == (len(H), len(lams))
    for i, h in enumerate(H):
        rho = PartialAssignment(dict(zip(S, h.tolist())))
        for _ in range(4):
            sol = random_ll1_point(multi, rho, rng)
            z = np.zeros(multi.arrays.m)
            for c, col in sol.system.z_cols.items():
                z[c] = sol.x[col]
            assert np.all(lams @ (z @ multi.weight_matrix) <= bound[i] + 1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_wsat_report_invariants(seed):
    b = random_planted("sat", 12, 2, w=2, m_per_instance=20, seed=seed)
    r = solve_wsat(b.multi, 0.3, {"t": 3}, seed=seed)
    assert r.trace["iterations"] <= 3 * 2
    oracle = brute_force_pareto(b.multi)
    assert oracle.best_min_ratio >= r.objective - 1e-9
    assert check_solution(r, b.multi, 0.0, 0.0).values_match
    assert r.trace["lp_feasible"] >= 1
