"""Package exception types."""

from __future__ import annotations


class DivergenceError(RuntimeError):
    """The volatility recursion overflowed (non-stationary dynamics)."""


class FitError(RuntimeError):
    """Quasi-maximum-likelihood estimation failed.

    Carries the best partial state seen across starts, when any.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class StudyError(RuntimeError):
    """A Monte Carlo study aborted (e.g. excessive fit-failure rate)."""
