"""Oracle-efficient adversarial contextual bandits.

A relaxation-based learner that needs only K+1 offline-optimization oracle
calls per round, together with the environments, baselines and verification
harness used to benchmark it at desk scale.
"""

from .core import (
    ActionDistribution,
    ActionIndex,
    Context,
    EstimatedCost,
    FutureDraw,
    HistoryRecord,
    build_estimate,
    check_cost_vector,
    draw_estimator_coin,
)
from .policies import (
    OracleStats,
    PolicyClass,
    ValueOracle,
    WeightedExample,
    best_policy_loss,
    random_policy_class,
)
from .learner import (
    LearnerConfig,
    OracleScores,
    RelaxationLearner,
    in_tuning_regime,
    inner_sup_value,
    inner_sup_values,
    oracle_scores,
    play_distribution,
    relaxation_value,
    sample_future,
    step,
    tune_scale,
    water_fill,
)
from .environments import (
    ContextDistribution,
    CostSchedule,
    make_adversary,
    sample_context,
)
from .baselines import (
    Exp4State,
    exp4_distribution,
    exp4_step,
    exp4_update,
    make_exp4_state,
    uniform_step,
)
from .harness import (
    ConfigError,
    ExperimentResult,
    RunResult,
    bound_curve,
    emit_outputs,
    run_experiment,
    theoretical_bound,
    validate_config,
)
from .verify import (
    AdmissibilityResult,
    admissibility_check,
    brute_force_minimax,
    rademacher_bound_check,
    simplex_grid,
    sup_by_vertex_enumeration,
    unbiasedness_check,
)

__all__ = [
    "ActionDistribution",
    "ActionIndex",
    "AdmissibilityResult",
    "ConfigError",
    "Context",
    "ContextDistribution",
    "CostSchedule",
    "EstimatedCost",
    "Exp4State",
    "ExperimentResult",
    "FutureDraw",
    "HistoryRecord",
    "LearnerConfig",
    "OracleScores",
    "OracleStats",
    "PolicyClass",
    "RelaxationLearner",
    "RunResult",
    "ValueOracle",
    "WeightedExample",
    "admissibility_check",
    "best_policy_loss",
    "bound_curve",
    "brute_force_minimax",
    "build_estimate",
    "check_cost_vector",
    "draw_estimator_coin",
    "emit_outputs",
    "exp4_distribution",
    "exp4_step",
    "exp4_update",
    "in_tuning_regime",
    "inner_sup_value",
    "inner_sup_values",
    "make_adversary",
    "make_exp4_state",
    "oracle_scores",
    "play_distribution",
    "rademacher_bound_check",
    "random_policy_class",
    "relaxation_value",
    "run_experiment",
    "sample_context",
    "sample_future",
    "simplex_grid",
    "step",
    "sup_by_vertex_enumeration",
    "theoretical_bound",
    "tune_scale",
    "unbiasedness_check",
    "uniform_step",
    "validate_config",
    "water_fill",
]

__version__ = "0.1.0"
