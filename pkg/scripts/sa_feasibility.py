"""Simulated annealing feasibility rate and optimality gap against brute force.

    python scripts/sa_feasibility.py --sizes 8 10 12 --seeds 100 --steps 100000
"""

import argparse

import numpy as np

from cbqs.baselines import SAConfig, enumerate_instance, simulated_annealing
from cbqs.bench import GeneratorParams, generate_instance


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 10, 12])
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--steps", type=int, default=100_000)
    args = ap.parse_args(argv)

    cfg = SAConfig(steps=args.steps)
    for n in args.sizes:
        feasible = optimal = 0
        for seed in range(args.seeds):
            inst = generate_instance(GeneratorParams(n, seed=seed))
            opt = enumerate_instance(inst).optimum
            r = simulated_annealing(inst, cfg, np.random.default_rng(seed))
            feasible += r.feasible
            optimal += r.feasible and r.objective == opt
        print(f"n={n:>3}  feasible {feasible}/{args.seeds}  optimal {optimal}/{args.seeds}")


if __name__ == "__main__":
    main()
