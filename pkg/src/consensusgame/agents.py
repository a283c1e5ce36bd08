"""Player strategies: truthful, risk-averse Nash, best response, R-learning.

Stage payoff for player i given the joint lie profile u:

    reward_i = -p_i * disutility(u) + theta * d_i . A[u]

where d_i is the player's Shapley linear-form row, A[.] the influence-
weighted average, and p_i the risk-aversion weight.  The closed-form
risk-averse equilibrium deviation is d_i * theta / (2 p_i); the best
response to a known opponent aggregate solves the same first-order
condition with the aggregate held fixed.

The R-learning agent cannot assume rational opponents.  It fits an affine
model of the opponents' mean deviation as a function of the broadcast mean
revealed opinion (recursive least squares), plays the best response against
the model's prediction with probability gamma, and otherwise explores with
a zero-mean Gaussian perturbation.  A running average-reward estimate and
average-adjusted value are maintained on the side.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .consensus import deviation_disutility
from .setfn import SetFunctionError

AGENT_KINDS = ("truthful", "nash", "rlearning")


@dataclass(frozen=True)
class PlayerParams:
    """Per-player strategy configuration.

    ``risk_aversion`` is the disutility weight p_i > 0.  The remaining
    fields only matter for the "rlearning" kind: ``exploit_prob`` is the
    probability gamma of playing the model-based best response,
    ``explore_std``/``explore_decay`` shape the Gaussian exploration
    perturbation, and ``value_rate``/``avg_reward_rate`` are the
    average-adjusted value and average-reward learning rates.
    """

    risk_aversion: float
    kind: str = "truthful"
    exploit_prob: float = 0.5
    explore_std: float = 0.05
    explore_decay: float = 1.0
    value_rate: float = 0.1
    avg_reward_rate: float = 0.01

    def __post_init__(self):
        if self.risk_aversion <= 0:
            raise SetFunctionError(f"risk aversion must be > 0, got {self.risk_aversion}")
        if self.kind not in AGENT_KINDS:
            raise SetFunctionError(f"unknown agent kind {self.kind!r}")
        if not 0.0 <= self.exploit_prob <= 1.0:
            raise SetFunctionError("exploit probability must lie in [0, 1]")
        if self.explore_std < 0 or not 0.0 < self.explore_decay <= 1.0:
            raise SetFunctionError("bad exploration parameters")


def nash_deviation(d_i: np.ndarray, theta: float, p_i: float) -> np.ndarray:
    """Closed-form risk-averse equilibrium lie: d_i * theta / (2 p_i).

    Constant over time.  When p_i is proportional to the influence weight
    t_i across all players, the profile's weighted mean deviation vanishes
    because the d rows sum to zero.
    """
    if p_i <= 0:
        raise SetFunctionError("risk aversion must be positive")
    return np.asarray(d_i, dtype=float) * (theta / (2.0 * p_i))


def nash_best_response(
    d_i: np.ndarray,
    theta: float,
    p_i: float,
    t_i: float,
    others_weighted_deviation: np.ndarray,
) -> np.ndarray:
    """Best response given the opponents' weighted deviation sum.

    Solves 2 p_i (u_i - t_i u_i - S) = d_i theta for u_i, where
    S = sum_{j != i} t_j u_j:

        u_i = (d_i theta / (2 p_i) + S) / (1 - t_i)
    """
    if p_i <= 0:
        raise SetFunctionError("risk aversion must be positive")
    if not 0.0 <= t_i < 1.0:
        raise SetFunctionError(f"best response requires t_i < 1, got {t_i}")
    d_i = np.asarray(d_i, dtype=float)
    s = np.asarray(others_weighted_deviation, dtype=float)
    return (d_i * theta / (2.0 * p_i) + s) / (1.0 - t_i)


def step_reward(
    deviations: np.ndarray,
    t: np.ndarray,
    p_i: float,
    theta: float,
    d_i: np.ndarray,
) -> float:
    """Stage reward: fraud disutility traded against the Shapley-shift gain."""
    u = np.asarray(deviations, dtype=float)
    t = np.asarray(t, dtype=float)
    mean_dev = t @ u
    return float(-p_i * deviation_disutility(u, t) + theta * (np.asarray(d_i) @ mean_dev))


def stage_cost(
    deviations: np.ndarray,
    t: np.ndarray,
    p_i: float,
    theta: float,
    d_i: np.ndarray,
) -> float:
    """Negated stage reward; the quantity each player myopically minimizes."""
    return -step_reward(deviations, t, p_i, theta, d_i)


@dataclass
class EnvironmentModel:
    """Affine opponent model fitted by recursive least squares.

    Maps the broadcast state s (mean revealed opinion, an m-vector) to the
    opponents' mean deviation.  Features are [1, s]; the coefficient matrix
    starts at zero, so the initial prediction is the zero map.

    The gain matrix doubles as a ridge prior.  The slope prior must stay
    tight: when every player fits every other player, any mutually
    consistent slope assignment is self-reinforcing, so slopes are left to
    earn their way out of zero from data rather than from early noise.
    """

    dim: int
    intercept_scale: float = 1e-2
    slope_scale: float = 1e-3
    coeffs: np.ndarray = field(init=False)
    gain: np.ndarray = field(init=False)
    residual_var: float = field(init=False, default=0.0)
    observations: int = field(init=False, default=0)

    def __post_init__(self):
        if self.dim < 1:
            raise SetFunctionError("environment model needs dimension >= 1")
        if self.intercept_scale <= 0 or self.slope_scale <= 0:
            raise SetFunctionError("prior scales must be positive")
        self.coeffs = np.zeros((self.dim + 1, self.dim))
        self.gain = np.diag(
            np.concatenate([[self.intercept_scale], np.full(self.dim, self.slope_scale)])
        )

    def _features(self, state: np.ndarray) -> np.ndarray:
        state = np.asarray(state, dtype=float)
        if state.shape != (self.dim,):
            raise SetFunctionError(f"state must have length {self.dim}")
        return np.concatenate([[1.0], state])

    def predict(self, state: np.ndarray) -> np.ndarray:
        return self.coeffs.T @ self._features(state)

    def update(self, state: np.ndarray, target: np.ndarray) -> None:
        phi = self._features(state)
        target = np.asarray(target, dtype=float)
        error = target - self.coeffs.T @ phi
        denom = 1.0 + phi @ self.gain @ phi
        k = (self.gain @ phi) / denom
        self.coeffs += np.outer(k, error)
        self.gain -= np.outer(k, phi @ self.gain)
        self.observations += 1
        sq = float(error @ error)
        self.residual_var += (sq - self.residual_var) / self.observations


@dataclass
class TruthfulAgent:
    """Always reveals the true opinion."""

    dim: int

    def act(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return np.zeros(self.dim)

    def observe(self, *args) -> None:
        pass


@dataclass
class NashAgent:
    """Plays the constant closed-form equilibrium deviation."""

    d_i: np.ndarray
    theta: float
    params: PlayerParams

    def act(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return nash_deviation(self.d_i, self.theta, self.params.risk_aversion)

    def observe(self, *args) -> None:
        pass


@dataclass
class RLearningAgent:
    """Model-based average-reward learner.

    ``act`` plays the best response against the fitted opponent model with
    probability gamma (exploitation) and otherwise perturbs that action
    with decaying zero-mean Gaussian noise (exploration).  ``observe``
    updates the opponent model on the observed (state, opponent mean
    deviation) pair and the average-reward bookkeeping.
    """

    d_i: np.ndarray
    theta: float
    t_i: float
    params: PlayerParams
    model: EnvironmentModel = field(init=False)
    avg_reward: float = field(init=False, default=0.0)
    value: float = field(init=False, default=0.0)
    opponent_var: float = field(init=False, default=0.0)
    steps_acted: int = field(init=False, default=0)
    steps_observed: int = field(init=False, default=0)

    def __post_init__(self):
        self.d_i = np.asarray(self.d_i, dtype=float)
        self.model = EnvironmentModel(self.d_i.size)

    def best_response(self, state: np.ndarray) -> np.ndarray:
        others = (1.0 - self.t_i) * self.model.predict(state)
        return nash_best_response(
            self.d_i, self.theta, self.params.risk_aversion, self.t_i, others
        )

    def act(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        action = self.best_response(state)
        explore = rng.uniform() >= self.params.exploit_prob
        if explore and self.params.explore_std > 0:
            scale = self.params.explore_std * self.params.explore_decay**self.steps_acted
            action = action + rng.normal(0.0, scale, size=action.size)
        self.steps_acted += 1
        return action

    def observe(
        self,
        state: np.ndarray,
        own_action: np.ndarray,
        opponent_mean_deviation: np.ndarray,
        opponent_deviation_var: float,
        reward: float,
    ) -> None:
        self.model.update(state, opponent_mean_deviation)
        self.steps_observed += 1
        self.opponent_var += (opponent_deviation_var - self.opponent_var) / self.steps_observed
        beta = self.params.avg_reward_rate
        alpha = self.params.value_rate
        self.avg_reward += beta * (reward - self.avg_reward)
        self.value += alpha * (reward - self.avg_reward - self.value)


def make_agent(params: PlayerParams, d_i: np.ndarray, theta: float, t_i: float):
    """Instantiate the agent matching a player's configuration."""
    if params.kind == "truthful":
        return TruthfulAgent(np.asarray(d_i).size)
    if params.kind == "nash":
        return NashAgent(np.asarray(d_i, dtype=float), theta, params)
    return RLearningAgent(np.asarray(d_i, dtype=float), theta, t_i, params)


def environment_model_csv(model: EnvironmentModel) -> str:
    """Learned coefficient snapshot: one row per feature, columns per output."""
    lines = ["feature," + ",".join(f"out_{j}" for j in range(model.dim))]
    names = ["intercept"] + [f"s_{j}" for j in range(model.dim)]
    for name, row in zip(names, model.coeffs):
        lines.append(name + "," + ",".join(repr(float(c)) for c in row))
    lines.append(f"residual_var,{model.residual_var!r}" + "," * (model.dim - 1))
    return "\n".join(lines) + "\n"
