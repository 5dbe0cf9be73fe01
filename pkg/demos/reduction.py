"""Compile a truth-table CSP to conjunctions, solve, and read the answer back."""
import numpy as np

from simulcsp.gen import random_generic
from simulcsp.reduce import reduce_multi
from simulcsp.solver_tree import solve_conj


def main() -> None:
    instances, targets, witness = random_generic(8, 2, q=3, w=2, m_per_instance=6, seed=1)
    multi, betas = reduce_multi(instances, targets)
    print("betas", np.round(betas, 4).tolist(), "terms", [len(W.constraints) for W in multi.instances])
    r = solve_conj(multi, 0.3, {"t": 2}, seed=0)
    original = [G.value(r.assignment) for G in instances]
    print("targets", np.round(targets, 4).tolist())
    print("values ", np.round(original, 4).tolist())
    print("min ratio", round(min(v / c for v, c in zip(original, targets)), 4), "=", round(r.objective, 4))


if __name__ == "__main__":
    main()
