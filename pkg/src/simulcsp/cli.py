"""Command-line front end: ``simulcsp gen | solve | verify | bench``.

Instances and reports are JSON in the ``simulcsp/1`` schema (see
:mod:`simulcsp.formats`).  Input defaults to stdin and output to stdout.
Exit codes: 0 success, 1 input error, 2 resource or budget exceeded,
3 invariant violation or a failed verification check.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import formats, gen, verify
from .core import MultiInstance, PartialAssignment
from .enumeration import assignments
from .errors import InputError, SimulCSPError
from .estimators import Params
from .reduce import reduce_multi, to_conj
from .solver_tree import solve_conj, solve_max2and
from .solvers_set import _json_safe, solve_maxcut, solve_wsat

ALGORITHMS = ("auto", "maxcut", "wsat", "conj", "max2and")
_AUTO = {"cut": "maxcut", "sat": "wsat", "conj": "conj"}


# ------------------------------------------------------------------ helpers

def _read_text(path: str | None) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from None


def _write_text(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as e:
        raise InputError(f"cannot write {path}: {e}") from None


def _overrides(args) -> dict | None:
    out = {k: getattr(args, k) for k in ("delta0", "eps0", "gamma", "t") if getattr(args, k, None) is not None}
    return out or None


def alpha_for(algorithm: str, multi: MultiInstance) -> float:
    if algorithm == "maxcut":
        return 0.5
    if algorithm == "wsat":
        return 0.75
    return 1.0 / multi.q ** (multi.w - 1)


def run_solver(multi: MultiInstance, algorithm: str = "auto", eps: float = 0.3, overrides=None,
               seed: int | None = 0, budget: int | None = None, node_budget: int | None = None):
    algo = _AUTO[multi.kind] if algorithm == "auto" else algorithm
    kw = {}
    if budget is not None:
        kw["budget"] = budget
    if algo == "maxcut":
        report = solve_maxcut(multi, eps, overrides, seed, **kw)
    elif algo == "wsat":
        report = solve_wsat(multi, eps, overrides, seed, **kw)
    elif algo in ("conj", "max2and"):
        if node_budget is not None:
            kw["node_budget"] = node_budget
        solver = solve_conj if algo == "conj" else solve_max2and
        report = solver(multi, eps, overrides, seed, **kw)
    else:
        raise InputError(f"unknown algorithm {algorithm!r}")
    alpha = alpha_for(algo, multi)
    report.flags["pareto_check"] = {
        "alpha": alpha,
        "threshold": alpha - eps,
        "passed": bool(report.objective >= alpha - eps - 1e-9),
    }
    return report


def _load_multi(text: str):
    """Parse a multi-instance file; generic files are reduced to conj first.

    Returns ``(multi, witness, reduction)`` where ``reduction`` is None or a
    dict with the betas and the original generic instances.
    """
    multi, witness = formats.multi_from_dict(formats.loads(text))
    if isinstance(multi, tuple):
        instances, targets = multi
        reduced, betas = reduce_multi(instances, targets)
        return reduced, witness, {"betas": betas, "instances": instances}
    return multi, witness, None


# ---------------------------------------------------------------------- gen

def cmd_gen(args) -> int:
    g = args.generator
    extra = {"generator": g}
    if g == "planted":
        b = gen.random_planted(args.kind, args.n, args.k, q=args.q, w=args.w, m_per_instance=args.m,
                               bias=args.bias, seed=args.seed, weights=args.weights)
        doc = formats.multi_to_dict(b.multi, witness=b.witness, extra=extra)
    elif g == "gap-three-cycle":
        doc = formats.multi_to_dict(gen.gap_three_cycle(args.eps_w), extra=extra)
    elif g == "gap-k-partition":
        doc = formats.multi_to_dict(gen.gap_k_partition(args.k, args.part_size), extra=extra)
    elif g == "max1sat":
        doc = formats.multi_to_dict(gen.max1sat_geometric(args.r), extra=extra)
    else:  # generic
        instances, targets, f = gen.random_generic(args.n, args.k, q=args.q, w=args.w,
                                                   m_per_instance=args.m, density=args.density, seed=args.seed)
        doc = formats.multi_to_dict(instances, targets, witness=f, extra=extra)
    _write_text(formats.dumps(doc), args.output)
    return 0


# -------------------------------------------------------------------- solve

def cmd_solve(args) -> int:
    multi, _, reduction = _load_multi(_read_text(args.input))
    start = time.perf_counter()
    report = run_solver(multi, args.algorithm, args.eps, _overrides(args), args.seed,
                        args.budget, args.node_budget)
    if reduction is not None:
        report.flags["reduced"] = True
        report.trace["betas"] = reduction["betas"]
        report.trace["original_values"] = [G.value(report.assignment) for G in reduction["instances"]]
    doc = formats.report_to_dict(report)
    if args.timing:
        doc["wall_time"] = time.perf_counter() - start
    _write_text(formats.dumps(doc), args.output)
    return 0


# ------------------------------------------------------------------- verify

def _verify_oracle(args, multi) -> dict:
    oracle = verify.brute_force_pareto(multi)
    if args.report:
        report = formats.report_from_dict(formats.loads(_read_text(args.report)))
    else:
        report = run_solver(multi, args.algorithm, args.eps, _overrides(args), args.seed)
    check = verify.check_solution(report, multi, 0.0, 0.0)
    return {
        "oracle_min_ratio": oracle.best_min_ratio,
        "oracle_assignment": oracle.best_assignment.tolist(),
        "solver_objective": report.objective,
        "values_match": check.values_match,
        "ok": bool(oracle.best_min_ratio >= report.objective - 1e-9 and check.values_match),
    }


def _random_rho(rng, n: int, q: int, max_size: int = 4) -> PartialAssignment:
    S = rng.choice(n, size=int(rng.integers(0, min(max_size, n) + 1)), replace=False)
    return PartialAssignment({int(v): int(rng.integers(q)) for v in S})


def _verify_rounding(args, multi) -> dict:
    rng = np.random.default_rng(args.seed)
    if multi is not None:
        cases = [multi] * args.trials
    else:
        shapes = [("sat", 2, 2), ("sat", 2, 3), ("conj", 2, 2), ("conj", 3, 2), ("conj", 2, 3), ("conj", 3, 3)]
        cases = [gen.random_planted(kind, 8, 2, q=q, w=w, m_per_instance=10, bias=0.5, seed=i).multi
                 for i in range(args.trials) for kind, q, w in [shapes[i % len(shapes)]]]
    worst, failed = np.inf, 0
    for m in cases:
        if m.kind not in ("sat", "conj"):
            raise InputError("rounding lemmas apply to sat and conj instances")
        rho = _random_rho(rng, m.n, m.q)
        rows = verify.rounding_check(m, rho, verify.random_ll1_point(m, rho, rng))
        failed += sum(not r["ok"] for r in rows)
        worst = min(worst, min(r["expected"] - r["bound"] for r in rows))
    return {"cases": len(cases), "failures": failed, "min_slack": float(worst), "ok": failed == 0}


def _verify_concentration(args) -> dict:
    rng = np.random.default_rng(args.seed)
    settings = {"cut": Params(0.1, 0.5, 0.01, 1), "sat": Params(0.2, 0.6, 0.01, 1)}
    rows = []
    for i in range(args.configs):
        kind = ("cut", "sat")[i % 2]
        P = settings[kind]
        W, rho, p = verify.low_variance_configuration(rng, kind, P)
        rows.append(verify.concentration_check(rho, p, W, P.eps0, P.delta0, args.trials, rng))
    return {"configurations": len(rows), "trials": args.trials,
            "max_frequency": max((r["frequency"] for r in rows), default=0.0),
            "failures": sum(not r["ok"] for r in rows), "ok": all(r["ok"] for r in rows)}


def _verify_perturb(args) -> dict:
    multi, h_star, g, S_star, trace, eps, t = verify.perturb_fixture()
    res = verify.perturb(h_star, g, S_star, multi, trace, eps, t)
    if not res.ok:
        return {"ok": False, "message": res.message}
    eff = verify.perturbation_effect(res, h_star, g, multi, S_star, eps)
    return {"specials": res.specials, "B_sizes": res.B_sizes, **eff}


def _verify_reduction(args, text) -> dict:
    if text is not None:
        parsed, _ = formats.multi_from_dict(formats.loads(text))
        if not isinstance(parsed, tuple):
            raise InputError("--reduction needs a generic instance file")
        groups = [parsed[0]]
    else:
        groups = []
        for i in range(args.trials):
            q, w = 2 + i % 2, 1 + i % 3
            groups.append(gen.random_generic(6, 1, q=q, w=w, m_per_instance=6, seed=args.seed + i)[0])
    worst = 0.0
    for instances in groups:
        for G in instances:
            W2, beta = to_conj(G)
            X = assignments(G.q, G.n)
            v2 = W2.arrays.satisfied(X).astype(float) @ W2.weights
            v1 = np.array([G.value(f) for f in X])
            worst = max(worst, float(np.abs(v2 - beta * v1).max()))
    return {"instances": sum(len(g) for g in groups), "max_error": worst, "ok": worst <= 1e-9}


def cmd_verify(args) -> int:
    wanted = [k for k in ("oracle", "rounding", "concentration", "perturb", "reduction") if getattr(args, k)]
    if not wanted:
        raise InputError("choose at least one of --oracle --rounding --concentration --perturb --reduction")
    text = None if args.input is None else _read_text(args.input)
    multi = None
    if text is not None and not args.reduction:
        multi, _, _ = _load_multi(text)
    checks = {}
    if args.oracle:
        if multi is None:
            raise InputError("--oracle needs an instance file")
        checks["oracle"] = _verify_oracle(args, multi)
    if args.rounding:
        checks["rounding"] = _verify_rounding(args, multi)
    if args.concentration:
        checks["concentration"] = _verify_concentration(args)
    if args.perturb:
        checks["perturb"] = _verify_perturb(args)
    if args.reduction:
        checks["reduction"] = _verify_reduction(args, text)
    passed = all(c["ok"] for c in checks.values())
    doc = {"schema": formats.SCHEMA, "passed": passed, "checks": checks}
    _write_text(formats.dumps(_json_safe(doc)), args.output)
    return 0 if passed else 3


# -------------------------------------------------------------------- bench

BENCH_FIELDS = ("seed", "objective", "threshold", "passed", "S_size", "oracle", "runtime")


def _bench_one(job) -> dict:
    cfg, seed = job
    start = time.perf_counter()
    oracle = None
    if cfg["kind"] in ("gap-k-partition", "gap-three-cycle"):
        if cfg["kind"] == "gap-k-partition":
            multi = gen.gap_k_partition(cfg["k"], cfg["part_size"])
        else:
            multi = gen.gap_three_cycle(cfg["eps_w"])
        oracle = verify.brute_force_opt_min(multi)
    else:
        multi = gen.random_planted(cfg["kind"], cfg["n"], cfg["k"], q=cfg["q"], w=cfg["w"],
                                   m_per_instance=cfg["m"], bias=cfg["bias"], seed=seed).multi
    report = run_solver(multi, "auto", cfg["eps"], cfg["overrides"], seed)
    pc = report.flags["pareto_check"]
    S_size = report.trace.get("S_size", report.trace.get("max_S"))
    return {"seed": seed, "objective": report.objective, "threshold": pc["threshold"],
            "passed": pc["passed"], "S_size": S_size, "oracle": oracle,
            "runtime": round(time.perf_counter() - start, 4)}


def cmd_bench(args) -> int:
    k = args.k if args.k is not None else (3 if args.kind == "gap-k-partition" else 2)
    cfg = {"kind": args.kind, "n": args.n, "k": k, "q": args.q, "w": args.w, "m": args.m,
           "bias": args.bias, "eps": args.eps, "overrides": _overrides(args),
           "part_size": args.part_size, "eps_w": args.eps_w}
    jobs = [(cfg, args.seed_start + i) for i in range(args.seeds)]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            rows = list(ex.map(_bench_one, jobs))  # map keeps seed order
    else:
        rows = [_bench_one(j) for j in jobs]
    summary = {"seeds": len(rows),
               "pass_rate": (sum(r["passed"] for r in rows) / len(rows)) if rows else None,
               "mean_objective": float(np.mean([r["objective"] for r in rows])) if rows else None}
    if args.format == "json":
        text = formats.dumps({"schema": formats.SCHEMA, "config": _json_safe(cfg),
                              "rows": rows, "summary": summary})
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
        if rows:
            print(f"pass_rate={summary['pass_rate']:.3f} mean_objective={summary['mean_objective']:.4f}",
                  file=sys.stderr)
    _write_text(text, args.output)
    return 0


# ------------------------------------------------------------------- parser

def _add_params(p) -> None:
    p.add_argument("--eps", type=float, default=0.3, help="approximation slack, in (0, 0.4]")
    p.add_argument("--t", type=int, help="override the per-instance budget t")
    p.add_argument("--delta0", type=float)
    p.add_argument("--eps0", type=float)
    p.add_argument("--gamma", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="simulcsp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a multi-instance file")
    gsub = g.add_subparsers(dest="generator", required=True)
    p = gsub.add_parser("planted", help="random instances with a planted assignment")
    p.add_argument("--kind", choices=("cut", "sat", "conj"), required=True)
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--w", type=int, default=2)
    p.add_argument("--m", type=int, default=40, help="constraints per instance")
    p.add_argument("--bias", type=float, default=0.85)
    p.add_argument("--weights", choices=gen.WEIGHT_LAWS, default="uniform")
    p.add_argument("--seed", type=int, default=0)
    p = gsub.add_parser("gap-three-cycle", help="three cut instances on a triangle")
    p.add_argument("--eps-w", type=float, default=0.01)
    p = gsub.add_parser("gap-k-partition", help="odd cycle of complete bipartite instances")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--part-size", type=int, default=2)
    p = gsub.add_parser("max1sat", help="geometric Max-1-SAT pair")
    p.add_argument("--r", type=int, default=4)
    p = gsub.add_parser("generic", help="random truth-table instances (reduced by solve)")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--w", type=int, default=2)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    for p in gsub.choices.values():
        p.add_argument("-o", "--output", help="output path (default stdout)")

    p = sub.add_parser("solve", help="run a solver and emit a report")
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--algorithm", choices=ALGORITHMS, default="auto")
    _add_params(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, help="max assignments enumerated per set S")
    p.add_argument("--node-budget", type=int, help="max tree nodes (conj)")
    p.add_argument("--timing", action="store_true", help="add wall_time (breaks byte-identical output)")
    p.add_argument("-o", "--output")

    p = sub.add_parser("verify", help="oracle and lemma checks")
    p.add_argument("input", nargs="?")
    p.add_argument("--oracle", action="store_true", help="brute-force dominance check")
    p.add_argument("--report", help="report to check instead of solving")
    p.add_argument("--rounding", action="store_true", help="LP rounding inequalities")
    p.add_argument("--concentration", action="store_true", help="low-variance tail frequency")
    p.add_argument("--perturb", action="store_true", help="perturbation fixture")
    p.add_argument("--reduction", action="store_true", help="generic to conj value identity")
    p.add_argument("--algorithm", choices=ALGORITHMS, default="auto")
    _add_params(p)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--configs", type=int, default=20, help="configurations for --concentration")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")

    p = sub.add_parser("bench", help="seed sweep, CSV or JSON table")
    p.add_argument("--kind", choices=("cut", "sat", "conj", "gap-k-partition", "gap-three-cycle"), default="cut")
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--k", type=int, help="instances (default 2, or 3 for gap-k-partition)")
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--w", type=int, default=2)
    p.add_argument("--m", type=int, default=80)
    p.add_argument("--bias", type=float, default=0.85)
    p.add_argument("--part-size", type=int, default=2)
    p.add_argument("--eps-w", type=float, default=0.01)
    _add_params(p)
    p.add_argument("--seeds", type=int, default=10, help="number of seeds")
    p.add_argument("--seed-start", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("-o", "--output")
    return ap


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "verify": cmd_verify, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except SimulCSPError as e:
        err = {"error": type(e).__name__, "message": str(e)}
        partial = getattr(e, "partial", None)
        if partial is not None:
            err["partial"] = partial
        print(json.dumps(_json_safe(err)), file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
