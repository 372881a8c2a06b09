"""Exception and warning types shared across the package."""


class OmitLabError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(OmitLabError, ValueError):
    """A physical parameter is missing, non-finite, or out of range.

    The message always names the offending field.
    """


class SingularGeometryError(ParameterError):
    """Geometry input that makes a coupling formula singular (e.g. zero separation)."""


class ConfigError(OmitLabError, ValueError):
    """Config file or scan specification is malformed."""


class BranchNotAvailableError(OmitLabError, LookupError):
    """A steady-state branch was requested that does not exist at this drive."""


class SingularResponseError(OmitLabError, ArithmeticError):
    """The sideband linear system is singular; the message names the vanishing
    response denominator."""


class UndefinedRatioError(OmitLabError, ValueError):
    """A probe-normalized quantity was requested with zero probe amplitude."""


class PhaseUndefinedError(OmitLabError, ArithmeticError):
    """Transmission magnitude is too small for its phase to be meaningful."""


class DivergenceError(OmitLabError, FloatingPointError):
    """Time integration produced a non-finite state; the message carries the time."""


class NumericalInconsistencyError(OmitLabError, ArithmeticError):
    """An internal cross-check failed beyond its tolerance."""


class PerturbativeRegimeWarning(UserWarning):
    """Probe or mechanical drive amplitude is large enough to strain the
    linearized sideband expansion."""
