"""Coalitional games with strategic opinion exchange.

Players hold private payoff functions over coalitions, exchange possibly
fraudulent opinions through a trust network, and split the grand-coalition
value by the Shapley allocation of the averaged opinion.  The package
provides the payoff-function machinery, Shapley and core computations, the
opinion dynamics, the player strategies, and a reproducible experiment
harness with a CLI.
"""

from .agents import (
    EnvironmentModel,
    environment_model_csv,
    NashAgent,
    PlayerParams,
    RLearningAgent,
    TruthfulAgent,
    make_agent,
    nash_best_response,
    nash_deviation,
    stage_cost,
    step_reward,
)
from .consensus import (
    ConsensusError,
    ConsensusParams,
    InfluenceMatrix,
    OpinionProfile,
    average_opinion,
    deviation_disutility,
    influence_weights,
    step_strategic,
    step_truthful,
)
from .core import (
    FeasibilityResult,
    LinearFeasibilityProblem,
    SimplexError,
    bayesian_core_contains,
    bayesian_core_is_empty,
    core_contains,
    core_is_empty,
    lp_feasible,
)
from .harness import (
    Scenario,
    ScenarioError,
    SimulationTrace,
    emit_trace,
    experiment_core_emptiness,
    experiment_efficiency,
    experiment_po_sweep,
    load_scenario,
    parse_trace,
    read_trace,
    run_simulation,
    scenario_from_dict,
)
from .setfn import (
    GroundTruthSpec,
    SamplerError,
    SetFunction,
    SetFunctionError,
    is_supermodular,
    random_supermodular,
    read_setfn,
    restricted_subset,
    sample_supermodular_opinion,
    subset_index,
    weighted_average,
    write_setfn,
)
from .shapley import Allocation, ShapleyLinearForm, shapley_linear_form, shapley_value

__all__ = [
    "Allocation",
    "ConsensusError",
    "ConsensusParams",
    "EnvironmentModel",
    "FeasibilityResult",
    "GroundTruthSpec",
    "InfluenceMatrix",
    "LinearFeasibilityProblem",
    "NashAgent",
    "OpinionProfile",
    "PlayerParams",
    "RLearningAgent",
    "SamplerError",
    "Scenario",
    "ScenarioError",
    "SetFunction",
    "SetFunctionError",
    "ShapleyLinearForm",
    "SimplexError",
    "SimulationTrace",
    "TruthfulAgent",
    "average_opinion",
    "bayesian_core_contains",
    "bayesian_core_is_empty",
    "core_contains",
    "core_is_empty",
    "deviation_disutility",
    "emit_trace",
    "environment_model_csv",
    "experiment_core_emptiness",
    "experiment_efficiency",
    "experiment_po_sweep",
    "influence_weights",
    "is_supermodular",
    "load_scenario",
    "lp_feasible",
    "make_agent",
    "nash_best_response",
    "nash_deviation",
    "parse_trace",
    "random_supermodular",
    "read_setfn",
    "read_trace",
    "restricted_subset",
    "run_simulation",
    "sample_supermodular_opinion",
    "scenario_from_dict",
    "shapley_linear_form",
    "shapley_value",
    "stage_cost",
    "step_reward",
    "step_strategic",
    "step_truthful",
    "subset_index",
    "weighted_average",
    "write_setfn",
]
