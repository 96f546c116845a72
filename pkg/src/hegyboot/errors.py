"""Exception hierarchy shared by every module."""


class HegyError(Exception):
    """Base class for all package errors."""


class DataError(HegyError):
    """Problems with the input series itself."""


class ConfigurationError(HegyError):
    """Invalid settings or an impossible model configuration."""


class SeriesTooShort(DataError):
    pass


class DimensionMismatch(HegyError, ValueError):
    pass


class SingularDesign(HegyError):
    """Regressors are (numerically) collinear."""


class ZeroVariance(HegyError):
    """A coefficient variance is exactly zero, so its t-statistic is undefined."""


class ZeroResidualVariance(HegyError):
    pass


class AllColumnsRemoved(ConfigurationError):
    pass


class EmptyPool(HegyError):
    pass


class ExplosiveRecursion(HegyError):
    """A bootstrap recursion left the admissible range of magnitudes."""


class BlockTooLong(ConfigurationError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingValue(ParseError):
    pass


class LengthNotMultipleOfFour(DataError):
    pass


class ReplicateFailure(HegyError):
    """A Monte Carlo replicate raised; the message carries its index and seed."""
