"""
Exceptions raised by the reduction toolkit.

Every failure that is a statement about the mathematics (a point outside the ball, a
bracket whose signs contradict the proved pattern, a Newton run that stalls) derives
from ReductionError so the CLI can map it to exit code 1 in one place.
"""

from typing import Optional, Sequence


class ReductionError(Exception):
    """Base class for all toolkit errors."""


class DomainError(ReductionError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class SingularityError(DomainError):
    """Two points coincide where a kernel is singular."""


class QuadratureError(ReductionError, RuntimeError):
    """The estimated quadrature error exceeds the requested tolerance."""


class BracketFailureError(ReductionError, RuntimeError):
    """Signs at bracket endpoints contradict the expected pattern."""


class DegeneracyError(ReductionError, RuntimeError):
    """A critical point is numerically degenerate."""


class AmbiguityError(ReductionError, RuntimeError):
    """A sign classification cannot be decided numerically."""


class NonConvergenceError(ReductionError, RuntimeError):
    """Newton iteration failed to reach the residual tolerance."""

    def __init__(self, message: str, residual_history: Sequence[float] = (),
                 rung: Optional[int] = None):
        super().__init__(message)
        self.residual_history = list(residual_history)
        self.rung = rung


class SignStructureLostError(ReductionError, RuntimeError):
    """A bubble-seeded solve converged to a field without the nodal structure."""


class ExtractionError(ReductionError, RuntimeError):
    """A diagnostic could not be extracted from a solution field."""
