"""Exception types raised across the package."""


class FsiError(Exception):
    """Base class for all package errors."""


class GeometryViolation(FsiError):
    pass


class InvalidIndex(FsiError, ValueError):
    pass


class DomainError(FsiError, ValueError):
    pass


class TruncationMismatch(FsiError, ValueError):
    pass


class SingularElement(FsiError):
    pass


class SolverBreakdown(FsiError):
    pass


class QuadratureNotConverged(FsiError):
    pass


class AliasingDetected(FsiError):
    pass


class TailNotNegligible(FsiError):
    pass


class FormatError(FsiError, ValueError):
    pass


class ConfigError(FsiError, ValueError):
    pass
