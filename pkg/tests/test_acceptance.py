"""The thirteen acceptance criteria, each at its stated size and tolerance.

Every criterion records one PASS/FAIL line (printed at the end of the run)
before asserting.
"""
import time

import numpy as np
import pytest

from simulcsp.core import MultiInstance, PartialAssignment, value
from simulcsp.enumeration import assignments
from simulcsp.estimators import Params, ProductDistribution, meancalc, varcalc
from simulcsp.formats import dumps, multi_to_dict
from simulcsp.gen import gap_k_partition, gap_three_cycle, random_generic, random_planted
from simulcsp.lp import integral_from_assignment, relaxation
from simulcsp.reduce import to_conj
from simulcsp.solver_tree import EXHAUSTED, grow_tree, leaf_consistent_with, solve_conj
from simulcsp.solvers_set import resolve_params, solve_maxcut, solve_wsat
from simulcsp.solver_tree import default_params_conj
from simulcsp.verify import (
    brute_force_moments,
    brute_force_opt_min,
    concentration_check,
    low_variance_configuration,
    perturb,
    perturb_fixture,
    perturbation_effect,
    random_ll1_point,
    rounding_check,
)

from .conftest import ACCEPTANCE, random_instance, random_rho

EPS = 0.3
SEEDS = range(50)
HARNESS = {
    # kind: (solver, n, m per instance, t, alpha, extra generator kwargs)
    "cut": (solve_maxcut, 40, 80, 6, 0.5, {}),
    "sat": (solve_wsat, 40, 80, 6, 0.75, {"w": 2}),
    "conj": (solve_conj, 30, 60, 3, 0.5, {"q": 2, "w": 2}),
}
_RUNS: dict = {}


def record(n: int, name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {n:2d} {name}: {detail}"
    ACCEPTANCE[n] = line
    print(line)


def harness_runs(kind: str) -> list:
    """50 planted runs per kind, computed once and shared by criteria 5-8, 12, 13."""
    if kind not in _RUNS:
        solver, n, m, t, alpha, extra = HARNESS[kind]
        runs = []
        for seed in SEEDS:
            b = random_planted(kind, n, 2, m_per_instance=m, bias=0.85, seed=seed, **extra)
            start = time.perf_counter()
            r = solver(b.multi, EPS, {"t": t}, seed=seed)
            runs.append((b, r, time.perf_counter() - start))
        _RUNS[kind] = runs
    return _RUNS[kind]


def pareto_rate(kind: str) -> tuple[float, float]:
    alpha = HARNESS[kind][4]
    runs = harness_runs(kind)
    ok = [r.objective >= alpha - EPS - 1e-12 for _, r, _ in runs]
    return sum(ok) / len(ok), sum(s for _, _, s in runs)


# ---------------------------------------------------------------------------

def test_01_exact_calculators():
    rng = np.random.default_rng(101)
    start, worst = time.perf_counter(), 0.0
    shapes = [("cut", 2, 2), ("sat", 2, 2), ("sat", 2, 3), ("conj", 2, 2), ("conj", 3, 2), ("conj", 3, 3)]
    for i in range(100):
        kind, q, w = shapes[i % len(shapes)]
        n = int(rng.integers(6, 13))
        free = min(n, 10 if q == 2 else 7)
        W = random_instance(rng, kind, n, int(rng.integers(3, 12)), q=q, w=w)
        rho = random_rho(rng, n, q, n - free + int(rng.integers(0, 3)) if n > free else int(rng.integers(0, 3)))
        p = ProductDistribution(rng.dirichlet(np.ones(q), size=n))
        mean, var = brute_force_moments(rho, p, W)
        worst = max(worst, abs(meancalc(rho, p, W) - mean), abs(varcalc(rho, p, W) - var))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 60
    record(1, "exact-calculator oracle", ok, f"max error {worst:.2e} over 100 instances in {elapsed:.1f}s")
    assert ok


def test_02_rounding_lemmas():
    rng = np.random.default_rng(202)
    start, fails, total = time.perf_counter(), 0, 0
    shapes = [("sat", 2, 2), ("sat", 2, 3), ("conj", 2, 2), ("conj", 3, 2), ("conj", 2, 3), ("conj", 3, 3)]
    for kind, q, w in shapes:
        for _ in range(100):
            Ws = [random_instance(rng, kind, 8, 10, q=q, w=w) for _ in range(2)]
            multi = MultiInstance(Ws, [0.0, 0.0])
            rho = random_rho(rng, 8, q, int(rng.integers(0, 4)))
            rows = rounding_check(multi, rho, random_ll1_point(multi, rho, rng))
            total += len(rows)
            fails += sum(not r["ok"] for r in rows)
    elapsed = time.perf_counter() - start
    ok = fails == 0 and elapsed < 120
    record(2, "rounding lemmas", ok, f"{fails}/{total} violations across {len(shapes)} shapes in {elapsed:.1f}s")
    assert ok


def test_03_relaxation_completeness():
    bad = 0
    for seed in range(50):
        kind, q, w = [("sat", 2, 2), ("conj", 2, 2), ("conj", 3, 2)][seed % 3]
        b = random_planted(kind, 10, 2, q=q, w=w, m_per_instance=12, seed=seed)
        rng = np.random.default_rng(seed)
        rho = PartialAssignment({int(v): int(b.witness[v]) for v in rng.choice(10, 3, replace=False)})
        sys_ = relaxation(rho, b.multi)
        sol = integral_from_assignment(b.witness, rho, sys_)
        feasible = sys_.violation(sol.x) <= 1e-9
        exhausted = True
        if kind == "conj":
            params = resolve_params(lambda: default_params_conj(2, EPS, q, w), {"t": 2})
            tree = grow_tree(b.multi, params)
            exhausted = leaf_consistent_with(tree, b.witness).status == EXHAUSTED
        bad += not (feasible and exhausted)
    record(3, "relaxation completeness", bad == 0, f"{50 - bad}/50 bundles")
    assert bad == 0


def test_04_concentration():
    rng = np.random.default_rng(404)
    start, fails = time.perf_counter(), []
    settings = {"cut": Params(0.1, 0.5, 1e-3, 1), "sat": Params(0.2, 0.6, 1e-3, 1)}
    for i in range(200):
        kind = "cut" if i % 2 == 0 else "sat"
        P = settings[kind]
        W, rho, p = low_variance_configuration(rng, kind, P)
        res = concentration_check(rho, p, W, P.eps0, P.delta0, 2000, rng)
        if not res["ok"]:
            fails.append(res)
    elapsed = time.perf_counter() - start
    ok = not fails and elapsed < 300
    record(4, "concentration", ok, f"{len(fails)}/200 configurations above delta0 + 3 SE in {elapsed:.1f}s")
    assert ok


def _all_runs():
    return [(k, b, r) for k in HARNESS for b, r, _ in harness_runs(k)]


def test_05_heavy_variable_bound():
    # the solvers raise InvariantViolation on any miss; here we confirm every
    # inclusion was checked in the shared runs
    missing = 0
    for kind, b, r in _all_runs():
        if kind in ("cut", "sat"):
            missing += r.trace["gamma_checks"] != r.trace["iterations"]
    record(5, "heavy-variable bound", missing == 0, f"{missing} unchecked inclusions over {len(_all_runs())} runs")
    assert missing == 0


@pytest.mark.parametrize("n,kind,limit", [(6, "cut", 300), (7, "sat", 600), (8, "conj", 600)])
def test_06_08_pareto_guarantee(n, kind, limit):
    rate, elapsed = pareto_rate(kind)
    alpha = HARNESS[kind][4]
    ok = rate >= 0.9 and elapsed < limit
    record(n, f"Pareto guarantee ({kind})", ok,
           f"{rate:.0%} of 50 seeds reach {alpha} - {EPS}; solver time {elapsed:.1f}s")
    assert ok


def test_09_reduction_identity():
    worst, count, seed = 0.0, 0, 0
    rng = np.random.default_rng(909)
    while count < 50:
        q, w = int(rng.integers(2, 4)), int(rng.integers(1, 4))
        n = int(rng.integers(w, 9 if q == 2 else 7))
        instances, _, _ = random_generic(n, 1, q=q, w=w, m_per_instance=6, seed=seed)
        seed += 1
        G = instances[0]
        if not any(c.rows for c in G.constraints):
            continue
        W2, beta = to_conj(G)
        X = assignments(q, n)
        lhs = W2.arrays.satisfied(X).astype(float) @ W2.weights
        rhs = beta * np.array([G.value(f) for f in X])
        worst = max(worst, float(np.abs(lhs - rhs).max()))
        count += 1
    ok = worst <= 1e-9
    record(9, "reduction identity", ok, f"max error {worst:.2e} over 50 instances")
    assert ok


def test_10_gap_instances():
    kp = brute_force_opt_min(gap_k_partition(3, 2))
    tc = brute_force_opt_min(gap_three_cycle(0.01))
    ok = kp == 0.5 and tc <= 0.02
    record(10, "gap instances", ok, f"k-partition opt_min {kp}, three-cycle opt_min {tc:.4f}")
    assert ok


def test_11_perturb_fixture():
    multi, h_star, g, S_star, trace, eps, t = perturb_fixture()
    res = perturb(h_star, g, S_star, multi, trace, eps)
    eff = perturbation_effect(res, h_star, g, multi, S_star, eps) if res.ok else {"ok": False}
    ok = res.ok and eff["ok"]
    detail = (f"value {eff['before'][0]:.4f} -> {eff['after'][0]:.4f}, "
              f"4*activedeg {4 * eff['high_variance'][0]['activedeg']:.4f}") if ok else res.message
    record(11, "perturb lemma fixture", ok, detail)
    assert ok


def test_12_termination_bounds():
    bad = 0
    for kind, b, r in _all_runs():
        t, k = HARNESS[kind][3], b.multi.k
        if kind in ("cut", "sat"):
            bad += r.trace["iterations"] > t * k
        else:
            bad += r.trace["max_depth"] > k * t
    record(12, "termination bounds", bad == 0, f"{bad} violations over {len(_all_runs())} runs")
    assert bad == 0


def test_13_determinism():
    diffs = []
    for kind, (solver, n, m, t, _, extra) in HARNESS.items():
        for seed in (0, 1, 2):
            texts = []
            for _ in range(2):
                b = random_planted(kind, n, 2, m_per_instance=m, bias=0.85, seed=seed, **extra)
                r = solver(b.multi, EPS, {"t": t}, seed=seed)
                texts.append((dumps(multi_to_dict(b.multi, witness=b.witness)), r.to_json()))
            diffs += [f"{kind}/{seed}"] if texts[0] != texts[1] else []
    for make in (lambda: gap_k_partition(5, 2), lambda: gap_three_cycle(0.01)):
        diffs += [] if dumps(multi_to_dict(make())) == dumps(multi_to_dict(make())) else ["gap"]
    a, b = (dumps(multi_to_dict(*random_generic(6, 2, q=3, seed=4)[:2])) for _ in range(2))
    diffs += [] if a == b else ["generic"]
    record(13, "determinism", not diffs, "byte-identical reruns" if not diffs else f"differs: {diffs}")
    assert not diffs
