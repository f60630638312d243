"""Calculus on time scales, Y-functions and monotonicity rule checking."""

__version__ = "0.1.0"

from .calculus import (  # noqa: E402
    DELTA,
    NABLA,
    DerivKind,
    ExprFunction,
    TableFunction,
    deriv,
    deriv2,
    integral,
    nabla_antiderivative,
)
from .errors import ConfigError, MathError, TScaleError  # noqa: E402
from .parser import parse_expr  # noqa: E402
from .timescale import Interval, PointRef, Points, TimeScale, make_scale, parse_scale  # noqa: E402
from .yfunction import FunctionPair, y_diamond, y_nabla  # noqa: E402

__all__ = [
    "DELTA", "NABLA", "DerivKind", "ExprFunction", "TableFunction", "deriv", "deriv2",
    "integral", "nabla_antiderivative", "ConfigError", "MathError", "TScaleError",
    "parse_expr", "Interval", "PointRef", "Points", "TimeScale", "make_scale", "parse_scale",
    "FunctionPair", "y_diamond", "y_nabla",
]
