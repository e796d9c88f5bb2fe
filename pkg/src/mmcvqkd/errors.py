"""Exception hierarchy shared by every module of the package."""


class CVQKDError(Exception):
    """Base class for all package errors."""


class DomainError(CVQKDError, ValueError):
    """An input lies outside the domain of the model."""


class NumericalDomainError(DomainError):
    """An intermediate quantity left its admissible range (e.g. a negative discriminant)."""


class FitError(CVQKDError, ValueError):
    """A least-squares fit could not be performed on the supplied data."""


class CalibrationError(CVQKDError, ValueError):
    """A fit succeeded but describes a physically invalid detector."""


class EstimationError(CVQKDError, ValueError):
    """Channel parameters could not be estimated from the data."""


class GainUndefinedError(CVQKDError, ArithmeticError):
    """Key-rate gain requested where the single-mode key rate is not positive."""


class ConfigError(CVQKDError, ValueError):
    """A scenario configuration is malformed or inconsistent."""


class ClampedEstimateWarning(UserWarning):
    """An estimate fell slightly outside its physical range and was clamped."""
