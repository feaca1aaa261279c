"""Policy evaluation with oblique projections.

Exact fixed-point oracles for any projection direction, the two-stage
state-aggregated batch solver, a linear-cost online learner driven by
closed-form per-sample scaling, the usual baselines (ETD, GTD2, LSTD, TD(0),
residual gradient), three benchmark domains, and a config-driven experiment
harness.
"""

__version__ = "0.1.0"

from .batch import (
    AggregatedModel,
    SOTDResult,
    aggregate,
    lstd_weights,
    nesterov_least_squares,
    optimal_diagonal_scaling,
    sotd,
    sotd_directions,
    sotd_weights,
)
from .errors import (
    ConfigError,
    DegenerateSampleError,
    NonErgodicError,
    NotTabularError,
    ObliqueTDError,
    SequentialSamplingError,
    SingularMatrixError,
)
from .mdp import (
    FeatureMap,
    InducedChain,
    Policy,
    Sample,
    StateDistribution,
    TabularMDP,
    generate_iid,
    generate_sequential,
    induce_chain,
    load_mdp_text,
    save_mdp_text,
    stationary_distribution,
    true_value,
)
from .metrics import EvaluationContext, monte_carlo_value, mse, mspbe, rms
from .online import (
    ETD,
    GTD2,
    LEARNER_KINDS,
    LearnerState,
    O2TD,
    ResidualGradient,
    StepRecord,
    TD0,
    make_learner,
    o2td_scale,
)
from .projection import (
    FixedPointSolution,
    ObliqueProjector,
    apply_projection,
    canonical_directions,
    fixed_point,
)

__all__ = [
    "AggregatedModel",
    "ConfigError",
    "DegenerateSampleError",
    "ETD",
    "EvaluationContext",
    "FeatureMap",
    "FixedPointSolution",
    "GTD2",
    "InducedChain",
    "LEARNER_KINDS",
    "LearnerState",
    "NonErgodicError",
    "NotTabularError",
    "O2TD",
    "ObliqueProjector",
    "ObliqueTDError",
    "Policy",
    "ResidualGradient",
    "SOTDResult",
    "Sample",
    "SequentialSamplingError",
    "SingularMatrixError",
    "StateDistribution",
    "StepRecord",
    "TD0",
    "TabularMDP",
    "aggregate",
    "apply_projection",
    "canonical_directions",
    "fixed_point",
    "generate_iid",
    "generate_sequential",
    "induce_chain",
    "load_mdp_text",
    "lstd_weights",
    "make_learner",
    "monte_carlo_value",
    "mse",
    "mspbe",
    "nesterov_least_squares",
    "o2td_scale",
    "optimal_diagonal_scaling",
    "rms",
    "save_mdp_text",
    "sotd",
    "sotd_directions",
    "sotd_weights",
    "stationary_distribution",
    "true_value",
]
