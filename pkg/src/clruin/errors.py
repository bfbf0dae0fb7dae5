"""Exception hierarchy shared by every module.

The CLI maps these onto its exit codes: configuration problems exit 2,
numerical failures exit 3, certification failures exit 4.
"""


class ClruinError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class ConfigError(ClruinError, ValueError):
    exit_code = 2


class DomainError(ClruinError, ValueError):
    """Argument outside the domain of a distributional functional."""


class UnsupportedDistribution(ClruinError, TypeError):
    exit_code = 2


class StepTooLarge(ClruinError, ValueError):
    pass


class TruncationTooSmall(ClruinError, ValueError):
    pass


class NoRoot(ClruinError, ArithmeticError):
    pass


class ScalingTooSmall(ClruinError, ValueError):
    """A bound was requested at a scaling index where it is not certified."""

    exit_code = 4


class ConditionUnreachable(ClruinError, ArithmeticError):
    exit_code = 4


class CapExceeded(ClruinError, RuntimeError):
    pass
