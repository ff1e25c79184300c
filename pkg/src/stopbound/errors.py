"""Exception types shared across the package."""

from __future__ import annotations


class StopboundError(Exception):
    """Base class for all package errors."""


class ConfigurationError(StopboundError):
    """A required piece of problem data (callable, derivative) is missing."""


class ParameterError(StopboundError):
    """A parameter value violates a documented restriction."""


class DiagnosticError(StopboundError):
    """A numerical sanity check failed in a way that demands user attention."""


class SolverError(StopboundError):
    """An iterative solver did not converge."""


class StabilityError(StopboundError):
    """A time step violates an explicit stability bound."""

    def __init__(self, message: str, required_dt: float | None = None):
        super().__init__(message)
        self.required_dt = required_dt


class BoundaryEvaluationError(StopboundError):
    """Boundary values were non-finite or undefined where a path needed them."""


class DegenerateRatioError(StopboundError):
    """A ratio estimator has a statistically indistinguishable-from-zero denominator."""


class UnsupportedError(StopboundError):
    """The requested operation is outside the implemented scope."""


class ValidationError(StopboundError):
    """A run configuration failed validation."""


class NumericOverflowError(StopboundError):
    """A quantity that is positive in exact arithmetic under- or overflowed."""
