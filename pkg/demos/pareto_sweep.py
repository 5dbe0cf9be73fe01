"""Run each solver over a few planted multi-instances and compare with the brute-force optimum.

    python3 demos/pareto_sweep.py --seeds 5
"""
import argparse

from simulcsp.gen import random_planted
from simulcsp.solver_tree import solve_conj
from simulcsp.solvers_set import solve_maxcut, solve_wsat
from simulcsp.verify import brute_force_pareto

SETUPS = {
    "cut": (solve_maxcut, 0.5, {}, 4),
    "sat": (solve_wsat, 0.75, {"w": 2}, 3),
    "conj": (solve_conj, 0.5, {"q": 2, "w": 2}, 2),
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--n", type=int, default=14)
    ap.add_argument("--eps", type=float, default=0.3)
    args = ap.parse_args()
    print(f"{'kind':5} {'seed':>4} {'solver':>8} {'oracle':>8} {'bound':>6}")
    for kind, (solver, alpha, extra, t) in SETUPS.items():
        for seed in range(args.seeds):
            b = random_planted(kind, args.n, 2, m_per_instance=24, seed=seed, **extra)
            r = solver(b.multi, args.eps, {"t": t}, seed=seed)
            best = brute_force_pareto(b.multi).best_min_ratio
            print(f"{kind:5} {seed:4d} {r.objective:8.4f} {best:8.4f} {alpha - args.eps:6.2f}")


if __name__ == "__main__":
    main()
