"""Exception types raised across the package."""


class EtbcError(Exception):
    """Base class for all package errors."""


class DomainError(EtbcError, ValueError):
    """An argument lies outside the domain of a function."""


class ResolutionError(EtbcError):
    """The spatial grid is too coarse for the requested quantity."""


class SingularSystemError(EtbcError, ArithmeticError):
    """The implicit step matrix is singular or not safely factorizable."""


class GridMismatchError(EtbcError, ValueError):
    """Two discretized objects live on different grids."""


class InvalidRegimeError(EtbcError, ValueError):
    """Parameters fall outside the regime where a bound is defined."""


class InvalidCertificateError(EtbcError):
    """A certificate cannot be built (e.g. non-positive dwell-time margin)."""


class ConfigError(EtbcError, ValueError):
    """A configuration document is malformed."""
