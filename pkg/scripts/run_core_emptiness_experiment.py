#!/usr/bin/env python3
"""Empty-Bayesian-core frequency as the player count grows.

Each trial samples one truncated-normal opinion per player around a
strictly supermodular ground truth and checks LP feasibility of the shared
allocation constraints.  Rejection-sampler failures are reported per trial
rather than silently dropped: at noise levels large relative to the
truth's strictness margin the exact sampler cannot produce opinions for
bigger games, which bounds the sigma this experiment can explore.
"""

import argparse

from consensusgame.harness import Scenario, experiment_core_emptiness

PLACEHOLDER_W = [[0.3, 0.7], [0.4, 0.6]]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=500)
    parser.add_argument("--sigma", type=float, default=0.004)
    parser.add_argument("--n-min", type=int, default=2)
    parser.add_argument("--n-max", type=int, default=8)
    parser.add_argument("--family", default="quadratic", choices=["quadratic", "mixed"])
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args()

    scenario = Scenario(
        kind="core-emptiness",
        n=2,
        theta=0.1,
        horizon=1,
        seed=args.seed,
        influence=PLACEHOLDER_W,
        trials=args.trials,
        n_min=args.n_min,
        n_max=args.n_max,
        sigma=args.sigma,
        truth_family=args.family,
    )
    print("n,trials,sampler_failures,empty,frequency")
    for row in experiment_core_emptiness(scenario):
        print(
            f"{row['n']},{row['trials']},{row['sampler_failures']},"
            f"{row['empty']},{row['frequency']!r}"
        )


if __name__ == "__main__":
    main()
