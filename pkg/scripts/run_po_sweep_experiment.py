#!/usr/bin/env python3
"""Opinion spread and Bayesian-core verdict across risk-aversion scales.

Runs the all-rational game to convergence for each p_o on a geometric grid
with p_i = p_o * t_i.  The limiting spread around the average opinion
scales as 1/p_o, and the Bayesian core of the limit profile flips to
nonempty once the spread is small enough.
"""

import argparse

import numpy as np

from consensusgame.harness import (
    Scenario,
    experiment_po_sweep,
    random_primitive_influence,
)
from consensusgame.setfn import random_supermodular


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=4)
    parser.add_argument("--po", type=float, nargs="+", default=[0.1, 1.0, 10.0, 100.0])
    parser.add_argument("--theta", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--horizon", type=int, default=5000)
    args = parser.parse_args()

    scenario = Scenario(
        kind="po-sweep",
        n=args.n,
        theta=args.theta,
        horizon=args.horizon,
        seed=args.seed,
        influence=random_primitive_influence(
            args.n, np.random.default_rng([args.seed, 1])
        ),
        initial_opinions=tuple(
            random_supermodular(args.n, np.random.default_rng([args.seed, 2, i]))
            for i in range(args.n)
        ),
        po_values=tuple(args.po),
    )
    print("p_o,spread,bayesian_core_empty,steps,converged")
    for row in experiment_po_sweep(scenario):
        print(
            f"{row['p_o']!r},{row['spread']!r},{int(row['bayesian_core_empty'])},"
            f"{row['steps']},{int(row['converged'])}"
        )


if __name__ == "__main__":
    main()
