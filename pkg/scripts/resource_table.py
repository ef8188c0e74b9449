"""Cycle counts and runtime estimates per Grover iteration over a size grid.

    python scripts/resource_table.py --sizes 10 50 100 500 --kappa 32
"""

import argparse

from cbqs.resources import (GATE_TIME_NS, budget_M, ca2_cycles, constraint_check_cycles,
                            cycles_per_grover_iteration, objective_cycles, runtime_seconds)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 20, 50, 100, 150, 500, 1000, 3000])
    ap.add_argument("--kappa", type=int, default=32)
    ap.add_argument("--gate-time-ns", type=float, default=GATE_TIME_NS)
    args = ap.parse_args(argv)

    k = args.kappa
    print(f"kappa={k}  ca2={ca2_cycles(k)}  gate={args.gate_time_ns} ns  (per-iteration total is a model choice)")
    head = ("n", "check", "objective", "per_iter", "budget_M", "seconds_at_M")
    print("{:>6} {:>14} {:>12} {:>14} {:>9} {:>13}".format(*head))
    for n in args.sizes:
        per = cycles_per_grover_iteration(n, k)
        M = budget_M(n)
        print(f"{n:>6} {constraint_check_cycles(n, k):>14} {objective_cycles(n, k):>12} {per:>14} {M:>9} "
              f"{runtime_seconds(M, per, args.gate_time_ns):>13.4g}")


if __name__ == "__main__":
    main()
