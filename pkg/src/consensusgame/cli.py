"""Command-line interface.

One subcommand per claim the library backs:

    simulate            run a scenario, write the trace CSV
    shapley             allocation of a payoff-function file
    core-check          classical core emptiness of a payoff-function file
    bayesian-core       Bayesian-core emptiness across opinion files
    exp-efficiency      average-opinion drift with and without p_i ~ t_i
    exp-core-emptiness  per-n empty-core frequency over sampled opinions
    exp-po-sweep        opinion spread and core verdict across p_o

Exit status is 0 when the run's verdict passes and 1 otherwise; errors
report on stderr and exit 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace


from .consensus import ConsensusError
from .core import bayesian_core_is_empty, core_constraints, lp_feasible
from .harness import (
    ScenarioError,
    dump_trace,
    emit_trace,
    experiment_core_emptiness,
    experiment_efficiency,
    experiment_po_sweep,
    load_scenario,
    run_simulation,
)
from .setfn import SamplerError, SetFunctionError, read_setfn
from .shapley import shapley_value


def _common_flags(default: bool) -> argparse.ArgumentParser:
    # the same flags hang off the main parser and every subcommand, so they
    # are accepted on either side of the command word; the subcommand copy
    # suppresses defaults to avoid clobbering values parsed up front
    holder = argparse.ArgumentParser(add_help=False)
    suppress = argparse.SUPPRESS
    holder.add_argument(
        "--seed",
        type=int,
        default=None if default else suppress,
        help="override the scenario seed",
    )
    holder.add_argument(
        "--out",
        default=None if default else suppress,
        help="output file (default: stdout)",
    )
    holder.add_argument(
        "--tol",
        type=float,
        default=1e-9 if default else suppress,
        help="feasibility tolerance",
    )
    holder.add_argument(
        "--json-summary",
        action="store_true",
        default=False if default else suppress,
        help="emit a machine-readable result record on stdout",
    )
    return holder


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="consensusgame",
        description="Coalitional games with strategic opinion exchange.",
        parents=[_common_flags(default=True)],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    shared = [_common_flags(default=False)]

    p = sub.add_parser("simulate", parents=shared, help="run a scenario and emit its trace CSV")
    p.add_argument("scenario")

    p = sub.add_parser("shapley", parents=shared, help="Shapley allocation of a payoff-function file")
    p.add_argument("setfn")

    p = sub.add_parser("core-check", parents=shared, help="classical core emptiness")
    p.add_argument("setfn")

    p = sub.add_parser("bayesian-core", parents=shared, help="Bayesian-core emptiness over opinions")
    p.add_argument("setfns", nargs="+")

    p = sub.add_parser("exp-efficiency", parents=shared, help="average-opinion drift experiment")
    p.add_argument("scenario")

    p = sub.add_parser("exp-core-emptiness", parents=shared, help="empty-core frequency experiment")
    p.add_argument("scenario")

    p = sub.add_parser("exp-po-sweep", parents=shared, help="risk-aversion sweep experiment")
    p.add_argument("scenario")

    return parser


def _write(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _summary(args, record: dict) -> None:
    if args.json_summary:
        print(json.dumps(record, sort_keys=True))


def _load(args):
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    return scenario


def _cmd_simulate(args) -> int:
    scenario = _load(args)
    trace = run_simulation(scenario)
    if args.out:
        emit_trace(trace, args.out)
    else:
        sys.stdout.write(dump_trace(trace))
    _summary(
        args,
        {
            "command": "simulate",
            "steps": trace.steps,
            "converged_at": trace.converged_at,
            "pass": True,
        },
    )
    return 0


def _cmd_shapley(args) -> int:
    f = read_setfn(args.setfn)
    allocation = shapley_value(f)
    lines = ["player,payoff"]
    lines += [f"{i},{float(p)!r}" for i, p in enumerate(allocation.payoffs)]
    _write(args, "\n".join(lines) + "\n")
    _summary(
        args,
        {"command": "shapley", "payoffs": [float(p) for p in allocation.payoffs], "pass": True},
    )
    return 0


def _witness_csv(witness) -> str:
    lines = ["player,payoff"]
    lines += [f"{i},{float(p)!r}" for i, p in enumerate(witness)]
    return "\n".join(lines) + "\n"


def _cmd_core_check(args) -> int:
    f = read_setfn(args.setfn)
    feasible, witness = lp_feasible(core_constraints(f), tol=args.tol)
    verdict = "nonempty" if feasible else "empty"
    text = verdict + "\n"
    if feasible:
        text += _witness_csv(witness)
    _write(args, text)
    _summary(args, {"command": "core-check", "verdict": verdict, "pass": True})
    return 0


def _cmd_bayesian_core(args) -> int:
    opinions = [read_setfn(p) for p in args.setfns]
    empty, witness = bayesian_core_is_empty(opinions, tol=args.tol)
    verdict = "empty" if empty else "nonempty"
    text = verdict + "\n"
    if witness is not None:
        text += _witness_csv(witness)
    _write(args, text)
    _summary(args, {"command": "bayesian-core", "verdict": verdict, "pass": True})
    return 0


def _cmd_exp_efficiency(args) -> int:
    scenario = _load(args)
    report = experiment_efficiency(scenario, tol=args.tol)
    lines = ["key,value"]
    lines += [f"{k},{v!r}" for k, v in report.items()]
    _write(args, "\n".join(lines) + "\n")
    _summary(args, {"command": "exp-efficiency", **report})
    return 0 if report["pass"] else 1


def _cmd_exp_core_emptiness(args) -> int:
    scenario = _load(args)
    rows = experiment_core_emptiness(scenario)
    lines = ["n,trials,sampler_failures,empty,frequency"]
    lines += [
        f"{r['n']},{r['trials']},{r['sampler_failures']},{r['empty']},{r['frequency']!r}"
        for r in rows
    ]
    _write(args, "\n".join(lines) + "\n")
    freqs = [r["frequency"] for r in rows]
    inversions = sum(1 for a, b in zip(freqs, freqs[1:]) if b < a - 0.02)
    trend = freqs[-1] > freqs[0] and inversions == 0
    _summary(
        args,
        {"command": "exp-core-emptiness", "frequencies": freqs, "pass": bool(trend)},
    )
    return 0 if trend else 1


def _cmd_exp_po_sweep(args) -> int:
    scenario = _load(args)
    rows = experiment_po_sweep(scenario)
    lines = ["p_o,spread,bayesian_core_empty,steps,converged"]
    lines += [
        f"{r['p_o']!r},{r['spread']!r},{int(r['bayesian_core_empty'])},{r['steps']},{int(r['converged'])}"
        for r in rows
    ]
    _write(args, "\n".join(lines) + "\n")
    spreads = [r["spread"] for r in rows]
    monotone = all(b <= a * (1 + 1e-9) + 1e-300 for a, b in zip(spreads, spreads[1:]))
    nonempty_at_top = not rows[-1]["bayesian_core_empty"]
    passed = monotone and nonempty_at_top
    _summary(
        args,
        {
            "command": "exp-po-sweep",
            "spreads": spreads,
            "monotone": monotone,
            "nonempty_at_largest": nonempty_at_top,
            "pass": passed,
        },
    )
    return 0 if passed else 1


_COMMANDS = {
    "simulate": _cmd_simulate,
    "shapley": _cmd_shapley,
    "core-check": _cmd_core_check,
    "bayesian-core": _cmd_bayesian_core,
    "exp-efficiency": _cmd_exp_efficiency,
    "exp-core-emptiness": _cmd_exp_core_emptiness,
    "exp-po-sweep": _cmd_exp_po_sweep,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ScenarioError, SetFunctionError, ConsensusError, SamplerError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
