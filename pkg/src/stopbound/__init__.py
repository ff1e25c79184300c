"""Lipschitz stopping boundaries for multidimensional diffusions.

The package solves finite and infinite horizon optimal stopping problems
with constant, possibly degenerate noise, extracts the stopping boundary as
a level set of the excess value, and verifies gradient and time-derivative
representations plus boundary slope bounds by Monte Carlo.
"""

from .boundary import (
    BoundarySurface,
    ConvergenceReport,
    LipschitzReport,
    SlopeEstimate,
    boundary_slopes,
    convergence_check,
    extract_boundary,
    freeze_time,
    lipschitz_estimate,
)
from .conditions import (
    CONDITION_TAGS,
    ConditionReport,
    LipschitzInputsReport,
    check_condition,
    check_lipschitz_inputs,
)
from .errors import (
    BoundaryEvaluationError,
    ConfigurationError,
    DegenerateRatioError,
    DiagnosticError,
    NumericOverflowError,
    ParameterError,
    SolverError,
    StabilityError,
    StopboundError,
    UnsupportedError,
    ValidationError,
)
from .examples import (
    EXAMPLE_NAMES,
    ExampleId,
    analytic_reference,
    applicability,
    build_example,
    default_box,
    default_probes,
    example_id,
    frozen_spec,
    measure_change,
    truncation_span,
)
from .flow import (
    DiagnosticsReport,
    HittingResult,
    PathBundle,
    derivative_flow,
    diagnostics,
    hitting_time,
    simulate_paths,
)
from .pde import (
    Grid,
    ValueSurface,
    classify_regions,
    fd_derivatives,
    solve_vi,
)
from .problem import (
    GeneratorImage,
    ProblemSpec,
    evaluate_m_n,
    freeze_axis,
    gamma_curve,
    hm_gradient,
    hm_time_derivative,
    hm_value,
    truncate_horizon,
)
from .represent import (
    Estimate,
    MeasureChange,
    PathSample,
    TimeBounds,
    apply_measure_change,
    custom_functional,
    estimate_grad_v,
    estimate_martingale_checkpoints,
    estimate_time_bounds,
    estimate_value,
    estimate_wcirc,
    estimate_what_phi,
    sample_functionals,
    tilt_problem,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # problem
    "ProblemSpec",
    "GeneratorImage",
    "evaluate_m_n",
    "hm_value",
    "hm_gradient",
    "hm_time_derivative",
    "gamma_curve",
    "freeze_axis",
    "truncate_horizon",
    # flow
    "PathBundle",
    "HittingResult",
    "DiagnosticsReport",
    "simulate_paths",
    "derivative_flow",
    "hitting_time",
    "diagnostics",
    # pde
    "Grid",
    "ValueSurface",
    "solve_vi",
    "fd_derivatives",
    "classify_regions",
    # represent
    "Estimate",
    "PathSample",
    "TimeBounds",
    "MeasureChange",
    "sample_functionals",
    "custom_functional",
    "estimate_value",
    "estimate_grad_v",
    "estimate_time_bounds",
    "estimate_wcirc",
    "estimate_what_phi",
    "estimate_martingale_checkpoints",
    "apply_measure_change",
    "tilt_problem",
    # boundary
    "BoundarySurface",
    "SlopeEstimate",
    "LipschitzReport",
    "ConvergenceReport",
    "extract_boundary",
    "freeze_time",
    "boundary_slopes",
    "lipschitz_estimate",
    "convergence_check",
    # conditions
    "CONDITION_TAGS",
    "ConditionReport",
    "LipschitzInputsReport",
    "check_condition",
    "check_lipschitz_inputs",
    # examples
    "EXAMPLE_NAMES",
    "ExampleId",
    "example_id",
    "build_example",
    "frozen_spec",
    "measure_change",
    "analytic_reference",
    "applicability",
    "truncation_span",
    "default_box",
    "default_probes",
    # errors
    "StopboundError",
    "ConfigurationError",
    "ParameterError",
    "ValidationError",
    "DiagnosticError",
    "SolverError",
    "StabilityError",
    "BoundaryEvaluationError",
    "DegenerateRatioError",
    "UnsupportedError",
    "NumericOverflowError",
]
