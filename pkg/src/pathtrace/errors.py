"""Exception types shared across the package."""
from __future__ import annotations


class PathTraceError(Exception):
    """Base class for all errors raised by pathtrace."""


class ConfigError(PathTraceError):
    """Invalid run configuration. ``violations`` lists every problem found."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class EvaluationError(PathTraceError):
    """A residual or Jacobian could not be evaluated (overflow, domain, NaN)."""

    def __init__(self, message, coordinate=None):
        self.coordinate = coordinate
        super().__init__(message)


class SolverError(PathTraceError):
    """A linear solve failed: singular or numerically ill-conditioned matrix."""


class DeflationError(PathTraceError):
    """Deflated residual requested at (or numerically on top of) a known root."""
