"""The two adversarial families: what one assignment can achieve on all instances at once."""
from simulcsp.gen import gap_k_partition, gap_three_cycle
from simulcsp.solvers_set import solve_maxcut
from simulcsp.verify import brute_force_opt_min


def main() -> None:
    for b in (0.1, 0.01, 0.001):
        multi = gap_three_cycle(b)
        alone = min(brute_force_opt_min([W]) for W in multi.instances)
        print(f"three-cycle b={b}: each alone {alone:.3f}, simultaneously {brute_force_opt_min(multi):.3f}")
    for k, s in ((3, 2), (5, 2), (3, 4)):
        multi = gap_k_partition(k, s)
        r = solve_maxcut(multi, 0.3, {"t": 2 * s}, seed=0)
        print(f"k-partition k={k} s={s}: opt_min {brute_force_opt_min(multi):.3f}, solver {r.objective:.3f}")


if __name__ == "__main__":
    main()
