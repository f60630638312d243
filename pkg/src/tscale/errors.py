"""Exception hierarchy.

Two families matter to callers: ``ConfigError`` (bad input, reported with
exit code 2 by the CLI) and ``MathError`` (a quantity is undefined at some
point, exit code 3).
"""


class TScaleError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(TScaleError):
    pass


class MathError(TScaleError):
    pass


# -- scales -----------------------------------------------------------------

class EmptyScale(ConfigError):
    pass


class InvalidComponent(ConfigError):
    pass


class NotInScale(ConfigError):
    def __init__(self, value, message=None):
        self.value = value
        super().__init__(message or f"point {value!r} is not in the time scale")


class InvalidRange(ConfigError):
    pass


class ScaleLiteralError(ConfigError):
    pass


class ParseError(ConfigError):
    """Expression syntax error; ``column`` is 1-based."""

    def __init__(self, message, column, source=""):
        self.column = column
        self.source = source
        super().__init__(f"column {column}: {message}")


# -- calculus ---------------------------------------------------------------

class DomainError(MathError):
    pass


class MissingSample(MathError):
    pass


class OutsideKappaDomain(MathError):
    pass


class TableOnDense(MathError):
    pass


class NumericLimitFailure(MathError):
    pass


class QuadratureError(MathError):
    pass


class ZeroDenominator(MathError):
    """A denominator vanished; ``point`` is the offending coordinate when known."""

    def __init__(self, message, point=None):
        self.point = point
        super().__init__(message)
