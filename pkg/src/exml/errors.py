"""Exception hierarchy shared across the package."""

from __future__ import annotations


class ExmlError(Exception):
    """Base class for all errors raised by this package."""


class InputError(ExmlError, ValueError):
    """Malformed or inconsistent input."""


class DegenerateDataError(InputError):
    """Data for which a data-dependent quantity is undefined (e.g. zero bandwidth)."""


class ConvergenceError(ExmlError, RuntimeError):
    """The ERM solver stopped before reaching the requested relative gap."""

    def __init__(self, message: str, gap: float, iterations: int):
        super().__init__(f"{message} (relative gap {gap:.3e} after {iterations} sweeps)")
        self.gap = gap
        self.iterations = iterations


class BudgetExhaustedError(ExmlError):
    """A new (sample, feature) pair was requested with no budget left."""


class AllocationError(ExmlError):
    """Feature acquisition could not complete; carries whatever was recorded so far."""

    def __init__(self, message: str, partial_report=None):
        super().__init__(message)
        self.partial_report = partial_report


class AcquisitionError(ExmlError):
    """A candidate-feature value needed at prediction time was unavailable."""


class ConfigError(InputError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
