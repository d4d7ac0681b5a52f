"""Projected online gradient descent on time-varying nonconvex losses, with
windowed local-regret meters and empirical checks of their bounds."""

from .exceptions import (
    ConfigError,
    DimensionError,
    LocalRegretError,
    NumericError,
    PreconditionError,
)
from .geometry import AllSpace, Ball, Box, FeasibleSet, diameter, displacement, is_interior, project
from .losses import (
    DriftingSine,
    GradientBound,
    LossSpec,
    ScriptedOracle,
    SwitchingQuadratic,
    finite_difference_gradient,
    gradient_bound,
    loss_gradient,
    loss_value,
)
from .optimizer import Constant, InverseSqrt, StepRecord, Trajectory, run, step
from .regret import (
    ConstantW,
    Growing,
    RegretSeries,
    WindowAccumulator,
    calibration_gap,
    hazan_local_regret,
    proposed_regret_directional,
    proposed_regret_interior,
    standard_regret,
    windowed_gradient_average,
)
from .bounds import (
    BoundConstants,
    estimate_constants,
    lemma1_residual,
    scenario1_bound,
    scenario2_bound,
    scenario3_bound,
    theorem1_lower_bound,
)
from .analysis import bound_report, growth_exponent, linear_fit_quality, log_fit_quality

__version__ = "0.1.0"
