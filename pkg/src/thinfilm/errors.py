"""Exception types shared across the package."""


class ThinFilmError(Exception):
    """Base class for all package errors."""


class ParameterError(ThinFilmError, ValueError):
    """An argument is outside the range an operation supports."""


class DomainError(ThinFilmError, ValueError):
    """An argument is inside the type's range but outside the formula's domain."""


class RegimeError(ThinFilmError, ValueError):
    """An operation was called for the wrong steady-state regime."""


class NumericalError(ThinFilmError, RuntimeError):
    """An iterative procedure failed to converge."""


class AnalysisError(ThinFilmError, ValueError):
    """A trajectory cannot be post-processed as requested."""


class StepFailure(ThinFilmError, RuntimeError):
    """A single implicit time step failed; the driver reacts by shrinking dt."""


class SupportBoundWarning(UserWarning):
    """Diagnostic for compact-support solutions in an ambiguous parameter corner."""
