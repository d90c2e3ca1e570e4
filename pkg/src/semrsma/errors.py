"""Exception types raised by the solvers and models."""


class SemRsmaError(Exception):
    """Base class for all package errors."""


class DomainError(SemRsmaError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class InfeasibleRate(SemRsmaError):
    """A semantic rate above the logistic ceiling was requested."""


class FitError(SemRsmaError):
    """Logistic fitting cannot proceed on the given samples."""


class InfeasibleUser(SemRsmaError):
    """A single semantic user cannot reach its target, even at full power."""


class PointInfeasible(SemRsmaError):
    """No allocation reaches the requested semantic rate for this scheme."""


# FDMA callers know this condition as "the band is exhausted"
InfeasiblePoint = PointInfeasible


class ConfigError(SemRsmaError):
    """Malformed or unknown configuration content."""
