"""Scenario configs, the simulation driver, trace I/O, and experiments.

A scenario is a JSON document naming the game (player count, trust matrix,
trust parameter, horizon, per-player strategies, master seed) and the
experiment kind.  Everything downstream is deterministic given the seed:
Monte-Carlo trials draw from streams derived from (seed, trial key), so
results do not depend on execution order.

Trace CSV layout (one file, fixed header, full-precision floats):

    kind,k,player,entry,v,x,u,vhat_<e>...,shapley_<i>...,reward_<i>...,disutility,cum_disutility

- one "opinion" row per step, player, and restricted entry carrying that
  entry of the true opinion v, the revealed opinion x, and the lie u
  (x and u are blank on the final step, where no action is taken);
- one "aggregate" row per step carrying the weighted average opinion, its
  Shapley allocation, per-player rewards, and the fraud disutility.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .agents import PlayerParams, RLearningAgent, make_agent, step_reward
from .consensus import InfluenceMatrix, OpinionProfile, step_strategic
from .core import bayesian_core_is_empty
from .setfn import (
    GroundTruthSpec,
    SamplerError,
    SetFunction,
    num_restricted,
    random_supermodular,
    sample_supermodular_opinion,
)
from .shapley import shapley_linear_form

CONVERGENCE_TOL = 1e-10

EXPERIMENT_KINDS = ("simulate", "efficiency", "core-emptiness", "po-sweep")


class ScenarioError(ValueError):
    """Scenario file rejected; message names the offending key."""


@dataclass(frozen=True)
class Scenario:
    """Fully resolved, runnable experiment description."""

    kind: str
    n: int
    theta: float
    horizon: int
    seed: int
    influence: np.ndarray
    initial_opinions: tuple[SetFunction, ...] | None = None
    players: tuple[PlayerParams, ...] | None = None
    p_o: float = 1.0
    po_values: tuple[float, ...] = ()
    trials: int = 0
    n_min: int = 2
    n_max: int = 8
    sigma: float = 0.0
    truth_family: str = "quadratic"
    perturb_grand: bool = True


@dataclass
class SimulationTrace:
    """Time-indexed record of one strategic-dynamics run.

    Opinions cover steps 0..K; actions (reveals, lies, rewards,
    disutility) cover steps 0..K-1.  All payoff vectors are restricted
    m-vectors; opinions are normalized so the grand value is implicit.
    """

    n: int
    steps: int
    opinions: np.ndarray  # (steps+1, n, m)
    revealed: np.ndarray  # (steps, n, m)
    deviations: np.ndarray  # (steps, n, m)
    average: np.ndarray  # (steps+1, m)
    shapley: np.ndarray  # (steps+1, n)
    rewards: np.ndarray  # (steps, n)
    disutility: np.ndarray  # (steps,)
    converged_at: int | None = None

    @property
    def m(self) -> int:
        return num_restricted(self.n)

    @staticmethod
    def empty(n: int) -> "SimulationTrace":
        """Trace with no recorded snapshots at all; emits a header-only CSV."""
        m = num_restricted(n)
        return SimulationTrace(
            n=n,
            steps=-1,
            opinions=np.zeros((0, n, m)),
            revealed=np.zeros((0, n, m)),
            deviations=np.zeros((0, n, m)),
            average=np.zeros((0, m)),
            shapley=np.zeros((0, n)),
            rewards=np.zeros((0, n)),
            disutility=np.zeros(0),
        )

    def cumulative_disutility(self) -> np.ndarray:
        out = np.zeros(max(self.steps + 1, 0))
        np.cumsum(self.disutility, out=out[1:])
        return out

    def final_opinions(self) -> tuple[SetFunction, ...]:
        return tuple(
            SetFunction.from_restricted(self.n, row, grand=1.0)
            for row in self.opinions[-1]
        )


def run_simulation(scenario: Scenario) -> SimulationTrace:
    """Drive the strategic dynamics: agents act, the update law advances.

    Stops at the horizon or as soon as the largest per-player opinion
    change falls below the convergence tolerance.  Deterministic given the
    scenario seed.
    """
    if scenario.players is None or len(scenario.players) != scenario.n:
        raise ScenarioError("players: one strategy config per player is required")
    if scenario.initial_opinions is None:
        raise ScenarioError("initial_opinions: required for simulation")
    for i, f in enumerate(scenario.initial_opinions):
        if not f.is_normalized(tol=1e-9):
            raise ScenarioError(
                f"initial_opinions[{i}]: must be normalized (grand value 1)"
            )
    influence = InfluenceMatrix.from_matrix(scenario.influence)
    n, m = scenario.n, num_restricted(scenario.n)
    theta = scenario.theta
    form = shapley_linear_form(n)
    t = influence.t
    agents = [
        make_agent(params, form.rows[i], theta, float(t[i]))
        for i, params in enumerate(scenario.players)
    ]
    rng = np.random.default_rng(scenario.seed)

    horizon = scenario.horizon
    opinions = np.empty((horizon + 1, n, m))
    revealed = np.empty((horizon, n, m))
    deviations = np.empty((horizon, n, m))
    average = np.empty((horizon + 1, m))
    shapley = np.empty((horizon + 1, n))
    rewards = np.empty((horizon, n))
    disutility = np.empty(horizon)

    profile = OpinionProfile(0, tuple(scenario.initial_opinions))
    state = np.zeros(m)  # broadcast mean revealed opinion; nothing revealed yet
    converged_at = None
    steps = horizon

    def snapshot(k: int, prof: OpinionProfile) -> None:
        for i, f in enumerate(prof.opinions):
            opinions[k, i] = f.restricted()
        average[k] = t @ opinions[k]
        shapley[k] = form.apply_restricted(average[k])

    snapshot(0, profile)
    for k in range(horizon):
        us = np.stack([agent.act(state, rng) for agent in agents])
        xs = tuple(
            SetFunction.from_restricted(
                n, f.restricted() + us[i], grand=f.grand_value
            )
            for i, f in enumerate(profile.opinions)
        )
        profile = profile.with_revealed(xs)
        revealed[k] = opinions[k] + us
        deviations[k] = us
        mean_dev = t @ us
        var_total = float(np.sum(t @ (us * us) - mean_dev * mean_dev))
        disutility[k] = var_total
        for i in range(n):
            rewards[k, i] = step_reward(
                us, t, scenario.players[i].risk_aversion, theta, form.rows[i]
            )
        for i, agent in enumerate(agents):
            if isinstance(agent, RLearningAgent):
                opp_mean = (mean_dev - t[i] * us[i]) / (1.0 - t[i])
                opp_sq = (t @ (us * us) - t[i] * us[i] * us[i]) / (1.0 - t[i])
                opp_var = float(np.sum(opp_sq - opp_mean * opp_mean))
                agent.observe(state, us[i], opp_mean, opp_var, rewards[k, i])
        state = t @ revealed[k]
        profile = step_strategic(profile, influence, theta)
        snapshot(k + 1, profile)
        if np.max(np.abs(opinions[k + 1] - opinions[k])) < CONVERGENCE_TOL:
            converged_at = k + 1
            steps = k + 1
            break

    return SimulationTrace(
        n=n,
        steps=steps,
        opinions=opinions[: steps + 1],
        revealed=revealed[:steps],
        deviations=deviations[:steps],
        average=average[: steps + 1],
        shapley=shapley[: steps + 1],
        rewards=rewards[:steps],
        disutility=disutility[:steps],
        converged_at=converged_at,
    )


# --- experiments -------------------------------------------------------------


def nash_players(n: int, t: np.ndarray, p_o: float) -> tuple[PlayerParams, ...]:
    """All-rational lineup with risk aversion proportional to influence."""
    return tuple(PlayerParams(risk_aversion=p_o * float(t[i]), kind="nash") for i in range(n))


def experiment_efficiency(scenario: Scenario, tol: float = 1e-9) -> dict:
    """Check that the average opinion stays put when p_i tracks t_i.

    Runs the all-rational game with risk aversion proportional to influence
    and reports the worst average-opinion drift, then reruns a control with
    equal risk aversion (which breaks the proportionality whenever the
    influence weights are non-uniform) and reports its drift.

    A single player has nobody to lie to: the report flags the case as
    degenerate with zero drift everywhere.
    """
    if scenario.n == 1:
        return {
            "experiment": "efficiency",
            "drift": 0.0,
            "control_drift": 0.0,
            "tol": tol,
            "degenerate": True,
            "pass": True,
        }
    influence = InfluenceMatrix.from_matrix(scenario.influence)
    t = influence.t
    main = replace(
        scenario, kind="simulate", players=nash_players(scenario.n, t, scenario.p_o)
    )
    trace = run_simulation(main)
    drift = float(np.max(np.abs(trace.average - trace.average[0])))

    degenerate = scenario.n == 1 or float(np.ptp(t)) < 1e-12
    control = replace(
        scenario,
        kind="simulate",
        players=tuple(
            PlayerParams(risk_aversion=scenario.p_o, kind="nash")
            for _ in range(scenario.n)
        ),
    )
    control_trace = run_simulation(control)
    control_drift = float(np.max(np.abs(control_trace.average - control_trace.average[0])))

    passed = drift < tol and (degenerate or control_drift > 1e-6)
    return {
        "experiment": "efficiency",
        "drift": drift,
        "control_drift": control_drift,
        "tol": tol,
        "degenerate": degenerate,
        "pass": passed,
    }


def quadratic_truth(n: int) -> SetFunction:
    """Normalized size-squared payoff: f(C) = |C|^2 / n^2."""
    sizes = np.bitwise_count(np.arange(1 << n)).astype(float)
    return SetFunction(n, (sizes / n) ** 2)


def mixed_truth(n: int, strict_weight: float = 0.3) -> SetFunction:
    """Near-modular truth: convex mix of |C|/n and the size-squared family."""
    if not 0.0 < strict_weight <= 1.0:
        raise ScenarioError("truth_family mixed: strict_weight must lie in (0, 1]")
    sizes = np.bitwise_count(np.arange(1 << n)).astype(float)
    vals = (1.0 - strict_weight) * sizes / n + strict_weight * (sizes / n) ** 2
    return SetFunction(n, vals)


TRUTH_FAMILIES = {"quadratic": quadratic_truth, "mixed": mixed_truth}


def experiment_core_emptiness(scenario: Scenario) -> list[dict]:
    """Per-n frequency of an empty Bayesian core over sampled opinions.

    For each player count, every trial draws one truncated-normal opinion
    per player around the per-n ground truth (grand value included) and
    asks the LP whether any allocation satisfies all private constraints.
    Trials whose rejection sampler exhausts its budget are counted as
    failures, not as data.
    """
    if scenario.trials < 1:
        raise ScenarioError("trials: must be >= 1 for core-emptiness")
    if scenario.sigma <= 0:
        raise ScenarioError("sigma: must be > 0 for core-emptiness")
    family = TRUTH_FAMILIES.get(scenario.truth_family)
    if family is None:
        raise ScenarioError(
            f"truth_family: unknown {scenario.truth_family!r}; "
            f"options: {sorted(TRUTH_FAMILIES)}"
        )
    rows = []
    for n in range(scenario.n_min, scenario.n_max + 1):
        truth = family(n)
        gts = GroundTruthSpec(truth, np.full(n, scenario.sigma))
        empty = 0
        failures = 0
        for trial in range(scenario.trials):
            rng = np.random.default_rng([scenario.seed, n, trial])
            try:
                opinions = [
                    sample_supermodular_opinion(
                        gts, i, rng, perturb_grand=scenario.perturb_grand
                    )
                    for i in range(n)
                ]
            except SamplerError:
                failures += 1
                continue
            if bayesian_core_is_empty(opinions).feasible:
                empty += 1
        completed = scenario.trials - failures
        rows.append(
            {
                "n": n,
                "trials": scenario.trials,
                "sampler_failures": failures,
                "empty": empty,
                "frequency": empty / completed if completed else float("nan"),
            }
        )
    return rows


def experiment_po_sweep(scenario: Scenario, po_values=None) -> list[dict]:
    """Opinion spread and Bayesian-core verdict across risk-aversion scales.

    Every sweep point runs the all-rational game to convergence with
    p_i = p_o * t_i, measures how far the per-player limits sit from the
    average opinion, and checks the Bayesian core of the limit profile.
    """
    values = tuple(po_values) if po_values is not None else scenario.po_values
    if not values:
        raise ScenarioError("po_values: at least one sweep point is required")
    influence = InfluenceMatrix.from_matrix(scenario.influence)
    t = influence.t
    rows = []
    for p_o in values:
        if p_o <= 0:
            raise ScenarioError(f"po_values: entries must be > 0, got {p_o}")
        sim = replace(
            scenario,
            kind="simulate",
            p_o=p_o,
            players=nash_players(scenario.n, t, p_o),
        )
        trace = run_simulation(sim)
        spread = float(np.max(np.abs(trace.opinions[-1] - trace.average[-1])))
        empty, _ = bayesian_core_is_empty(list(trace.final_opinions()))
        rows.append(
            {
                "p_o": p_o,
                "spread": spread,
                "bayesian_core_empty": empty,
                "steps": trace.steps,
                "converged": trace.converged_at is not None,
            }
        )
    return rows


# --- trace CSV ---------------------------------------------------------------


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def trace_header(n: int, m: int) -> str:
    cols = ["kind", "k", "player", "entry", "v", "x", "u"]
    cols += [f"vhat_{e}" for e in range(m)]
    cols += [f"shapley_{i}" for i in range(n)]
    cols += [f"reward_{i}" for i in range(n)]
    cols += ["disutility", "cum_disutility"]
    return ",".join(cols)


def dump_trace(trace: SimulationTrace) -> str:
    n, m, steps = trace.n, trace.m, trace.steps
    cum = trace.cumulative_disutility()
    blank_agg = [""] * (m + 2 * n + 2)
    lines = [trace_header(n, m)]
    for k in range(steps + 1):
        acted = k < steps
        for i in range(n):
            for e in range(m):
                row = [
                    "opinion",
                    str(k),
                    str(i),
                    str(e),
                    _fmt(trace.opinions[k, i, e]),
                    _fmt(trace.revealed[k, i, e]) if acted else "",
                    _fmt(trace.deviations[k, i, e]) if acted else "",
                ]
                lines.append(",".join(row + blank_agg))
        agg = ["aggregate", str(k), "", "", "", "", ""]
        agg += [_fmt(x) for x in trace.average[k]]
        agg += [_fmt(x) for x in trace.shapley[k]]
        agg += [_fmt(x) for x in trace.rewards[k]] if acted else [""] * n
        agg += [_fmt(trace.disutility[k]) if acted else "", _fmt(cum[k])]
        lines.append(",".join(agg))
    return "\n".join(lines) + "\n"


def emit_trace(trace: SimulationTrace, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dump_trace(trace))
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


def parse_trace(text: str) -> SimulationTrace:
    """Rebuild a trace from its CSV; inverse of dump_trace."""
    lines = text.splitlines()
    if not lines:
        raise ScenarioError("empty trace file")
    header = lines[0].split(",")
    m = sum(1 for c in header if c.startswith("vhat_"))
    n = sum(1 for c in header if c.startswith("shapley_"))
    if m == 0 or n == 0 or header != trace_header(n, m).split(","):
        raise ScenarioError("unrecognized trace header")
    body = [ln.split(",") for ln in lines[1:] if ln]
    if not body:
        return SimulationTrace.empty(n)
    ks = [int(row[1]) for row in body if row[0] == "aggregate"]
    steps = max(ks)
    trace = SimulationTrace(
        n=n,
        steps=steps,
        opinions=np.zeros((steps + 1, n, m)),
        revealed=np.zeros((steps, n, m)),
        deviations=np.zeros((steps, n, m)),
        average=np.zeros((steps + 1, m)),
        shapley=np.zeros((steps + 1, n)),
        rewards=np.zeros((steps, n)),
        disutility=np.zeros(steps),
    )
    for row in body:
        k = int(row[1])
        if row[0] == "opinion":
            i, e = int(row[2]), int(row[3])
            trace.opinions[k, i, e] = float(row[4])
            if k < steps:
                trace.revealed[k, i, e] = float(row[5])
                trace.deviations[k, i, e] = float(row[6])
        elif row[0] == "aggregate":
            off = 7
            trace.average[k] = [float(v) for v in row[off : off + m]]
            trace.shapley[k] = [float(v) for v in row[off + m : off + m + n]]
            if k < steps:
                trace.rewards[k] = [float(v) for v in row[off + m + n : off + m + 2 * n]]
                trace.disutility[k] = float(row[off + m + 2 * n])
        else:
            raise ScenarioError(f"unknown trace row kind {row[0]!r}")
    return trace


def read_trace(path) -> SimulationTrace:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_trace(fh.read())


# --- scenario files ----------------------------------------------------------


def random_primitive_influence(n: int, rng: np.random.Generator) -> np.ndarray:
    """Dense positive row-stochastic matrix; positivity makes it primitive."""
    w = rng.uniform(0.1, 1.0, size=(n, n))
    return w / w.sum(axis=1, keepdims=True)


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return scenario_from_dict(raw, source=str(path))


def scenario_from_dict(raw: dict, source: str = "<scenario>") -> Scenario:
    """Validate and resolve a scenario document.

    Generator shorthands ("random_primitive" influence, "random_supermodular"
    opinions) are expanded deterministically from the master seed.
    """

    def fail(key: str, msg: str):
        raise ScenarioError(f"{source}: {key}: {msg}")

    if not isinstance(raw, dict):
        raise ScenarioError(f"{source}: scenario must be a JSON object")
    kind = raw.get("kind", "simulate")
    if kind not in EXPERIMENT_KINDS:
        fail("kind", f"must be one of {EXPERIMENT_KINDS}, got {kind!r}")

    n = raw.get("n")
    if not isinstance(n, int) or n < 1:
        fail("n", f"positive integer player count required, got {n!r}")
    theta = raw.get("theta")
    if not isinstance(theta, (int, float)) or not 0.0 < float(theta) < 1.0:
        fail("theta", f"trust parameter in (0, 1) required, got {theta!r}")
    horizon = raw.get("horizon")
    if not isinstance(horizon, int) or horizon < 0:
        fail("horizon", f"nonnegative integer required, got {horizon!r}")
    seed = raw.get("seed")
    if not isinstance(seed, int):
        fail("seed", "an explicit integer seed is mandatory for reproducibility")

    influence_raw = raw.get("influence")
    if influence_raw == "random_primitive":
        influence = random_primitive_influence(n, np.random.default_rng([seed, 1]))
    elif isinstance(influence_raw, list):
        influence = np.asarray(influence_raw, dtype=float)
        if influence.shape != (n, n):
            fail("influence", f"must be an {n}x{n} matrix")
        if np.any(influence < 0) or np.max(np.abs(influence.sum(axis=1) - 1.0)) > 1e-9:
            fail("influence", "rows must be nonnegative and sum to 1")
    else:
        fail("influence", 'matrix rows or the string "random_primitive" required')

    opinions_raw = raw.get("initial_opinions")
    initial_opinions: tuple[SetFunction, ...] | None
    if opinions_raw is None:
        initial_opinions = None
        if kind in ("simulate", "efficiency", "po-sweep"):
            fail("initial_opinions", f"required for kind {kind!r}")
    elif opinions_raw == "random_supermodular":
        initial_opinions = tuple(
            random_supermodular(n, np.random.default_rng([seed, 2, i]))
            for i in range(n)
        )
    elif isinstance(opinions_raw, dict) and "ground_truth" in opinions_raw:
        spec = opinions_raw["ground_truth"]
        if not isinstance(spec, dict):
            fail("initial_opinions.ground_truth", "object required")
        family = TRUTH_FAMILIES.get(spec.get("family", "quadratic"))
        if family is None:
            fail(
                "initial_opinions.ground_truth.family",
                f"unknown {spec.get('family')!r}; options: {sorted(TRUTH_FAMILIES)}",
            )
        sigma = spec.get("sigma")
        if not isinstance(sigma, (int, float)) or sigma < 0:
            fail("initial_opinions.ground_truth.sigma", "nonnegative number required")
        truth_spec = GroundTruthSpec(family(n), np.full(n, float(sigma)))
        # the dynamics keep the grand value fixed, so sampling leaves it at
        # the truth's (normalized) value
        initial_opinions = tuple(
            sample_supermodular_opinion(
                truth_spec, i, np.random.default_rng([seed, 3, i]), perturb_grand=False
            )
            for i in range(n)
        )
    elif isinstance(opinions_raw, list):
        if len(opinions_raw) != n:
            fail("initial_opinions", f"expected {n} entries, got {len(opinions_raw)}")
        parsed = []
        for i, item in enumerate(opinions_raw):
            if not isinstance(item, dict) or "restricted" not in item:
                fail(f"initial_opinions[{i}]", 'object with "restricted" list required')
            restricted = np.asarray(item["restricted"], dtype=float)
            if restricted.shape != (num_restricted(n),):
                fail(
                    f"initial_opinions[{i}].restricted",
                    f"expected {num_restricted(n)} values",
                )
            grand = float(item.get("grand", 1.0))
            parsed.append(SetFunction.from_restricted(n, restricted, grand))
        initial_opinions = tuple(parsed)
    else:
        fail("initial_opinions", "list of opinions or 'random_supermodular' required")

    players_raw = raw.get("players")
    players: tuple[PlayerParams, ...] | None = None
    if players_raw is not None:
        if not isinstance(players_raw, list) or len(players_raw) != n:
            fail("players", f"expected a list of {n} player configs")
        parsed_players = []
        known = {
            "kind",
            "risk_aversion",
            "exploit_prob",
            "explore_std",
            "explore_decay",
            "value_rate",
            "avg_reward_rate",
        }
        for i, item in enumerate(players_raw):
            if not isinstance(item, dict):
                fail(f"players[{i}]", "object required")
            unknown = set(item) - known
            if unknown:
                fail(f"players[{i}]", f"unknown keys {sorted(unknown)}")
            try:
                parsed_players.append(PlayerParams(**item))
            except (TypeError, ValueError) as exc:
                fail(f"players[{i}]", str(exc))
        players = tuple(parsed_players)
    elif kind == "simulate":
        fail("players", "required for kind 'simulate'")

    return Scenario(
        kind=kind,
        n=n,
        theta=float(theta),
        horizon=horizon,
        seed=seed,
        influence=influence,
        initial_opinions=initial_opinions,
        players=players,
        p_o=float(raw.get("p_o", 1.0)),
        po_values=tuple(raw.get("po_values", ())),
        trials=int(raw.get("trials", 0)),
        n_min=int(raw.get("n_min", 2)),
        n_max=int(raw.get("n_max", 8)),
        sigma=float(raw.get("sigma", 0.0)),
        truth_family=str(raw.get("truth_family", "quadratic")),
        perturb_grand=bool(raw.get("perturb_grand", True)),
    )
