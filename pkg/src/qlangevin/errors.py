"""Typed exceptions raised across the package.

Every error derives from :class:`QLEError`; the CLI maps subclasses of
:class:`ValidationError` to exit status 2 and all other ``QLEError`` to 1.
"""


class QLEError(Exception):
    """Base class for all package errors."""


class DomainError(QLEError, ValueError):
    """An argument lies outside the domain of the operation."""


class PoleError(DomainError):
    """Evaluation requested exactly at a pole of the susceptibility."""


class CausalityError(DomainError):
    """Parameters would put a pole in the upper half plane (negative bare mass)."""


class UnsupportedOperation(QLEError):
    """The requested operation is not defined for this model."""


class DivergenceError(QLEError):
    """The requested integral diverges for the given model."""


class ExtrapolationError(DomainError):
    """A tabulated function was queried outside its grid."""


class CoverageError(QLEError):
    """A tabulated input does not cover enough of the spectrum."""

    def __init__(self, message, suggested_omega_max=None):
        super().__init__(message)
        self.suggested_omega_max = suggested_omega_max


class ConvergenceError(QLEError):
    """Quadrature failed to reach tolerance within the panel budget."""

    def __init__(self, message, value=float("nan"), error_estimate=float("inf")):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class RunningStateError(DomainError):
    """Josephson bias at or above the critical current (no potential minimum)."""


class UnitError(QLEError):
    """Operation needs physical constants the active unit system lacks."""


class EmbeddingError(QLEError):
    """Circulant embedding produced a non positive-definite covariance."""


class BlowUpError(QLEError):
    """A simulated trajectory exceeded the overflow guard."""

    def __init__(self, message, path_index=None):
        super().__init__(message)
        self.path_index = path_index


class ValidationError(QLEError):
    """Configuration or input file failed schema validation."""


class FormatError(ValidationError):
    """Input data has the wrong layout (non-uniform grid, bad CSV, ...)."""
