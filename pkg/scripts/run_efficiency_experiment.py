#!/usr/bin/env python3
"""Average-opinion drift with and without risk aversion tracking influence.

For each player count, draws a random primitive trust matrix and random
strictly supermodular initial opinions, then runs the all-rational game
twice: once with p_i proportional to the influence weights (drift should
vanish) and once with equal p_i as a control (drift should not).
"""

import argparse

import numpy as np

from consensusgame.harness import (
    Scenario,
    experiment_efficiency,
    random_primitive_influence,
)
from consensusgame.setfn import random_supermodular


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[2, 5, 8])
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--horizon", type=int, default=200)
    parser.add_argument("--theta", type=float, default=0.1)
    args = parser.parse_args()

    print("n,drift,control_drift,pass")
    for n in args.sizes:
        scenario = Scenario(
            kind="efficiency",
            n=n,
            theta=args.theta,
            horizon=args.horizon,
            seed=args.seed,
            influence=random_primitive_influence(
                n, np.random.default_rng([args.seed, 1, n])
            ),
            initial_opinions=tuple(
                random_supermodular(n, np.random.default_rng([args.seed, 2, n, i]))
                for i in range(n)
            ),
            p_o=1.0,
        )
        report = experiment_efficiency(scenario)
        print(f"{n},{report['drift']!r},{report['control_drift']!r},{report['pass']}")


if __name__ == "__main__":
    main()
