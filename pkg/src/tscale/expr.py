"""Univariate expression trees.

Nodes are frozen dataclasses, so two trees compare equal exactly when they
are structurally identical.  Constants are :class:`fractions.Fraction`;
evaluating a rational tree (no transcendental nodes, integer powers) at a
rational point is exact, anything else falls back to binary floating point.
Undefined operations raise :class:`~tscale.errors.DomainError` instead of
producing NaN or infinity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from numbers import Real

from .errors import DomainError

# Printing precedence; higher binds tighter.
_ADD, _MUL, _NEG, _POW, _ATOM = 1, 2, 3, 4, 5


class Expr:
    prec = _ATOM

    def evaluate(self, x: Real) -> Real:
        raise NotImplementedError

    def diff(self) -> "Expr":
        """Derivative with respect to ``x``."""
        raise NotImplementedError

    def __str__(self):
        return to_source(self)

    def __call__(self, x):
        return self.evaluate(x)


@dataclass(frozen=True)
class Const(Expr):
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))

    def evaluate(self, x):
        return self.value

    def diff(self):
        return ZERO


@dataclass(frozen=True)
class Var(Expr):
    def evaluate(self, x):
        return x

    def diff(self):
        return ONE


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr
    prec = _NEG

    def evaluate(self, x):
        return -self.arg.evaluate(x)

    def diff(self):
        return neg(self.arg.diff())


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr
    prec = _ADD
    symbol = "+"

    def evaluate(self, x):
        return _finite(self.left.evaluate(x) + self.right.evaluate(x))

    def diff(self):
        return add(self.left.diff(), self.right.diff())


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr
    prec = _ADD
    symbol = "-"

    def evaluate(self, x):
        return _finite(self.left.evaluate(x) - self.right.evaluate(x))

    def diff(self):
        return sub(self.left.diff(), self.right.diff())


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr
    prec = _MUL
    symbol = "*"

    def evaluate(self, x):
        return _finite(self.left.evaluate(x) * self.right.evaluate(x))

    def diff(self):
        return add(mul(self.left.diff(), self.right), mul(self.left, self.right.diff()))


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr
    prec = _MUL
    symbol = "/"

    def evaluate(self, x):
        num = self.left.evaluate(x)
        den = self.right.evaluate(x)
        if den == 0:
            raise DomainError(f"division by zero at x={_show(x)}")
        return _finite(num / den)

    def diff(self):
        top = sub(mul(self.left.diff(), self.right), mul(self.left, self.right.diff()))
        return div(top, pow_(self.right, Const(2)))


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: Expr
    prec = _POW
    symbol = "^"

    def evaluate(self, x):
        b = self.base.evaluate(x)
        e = self.exponent.evaluate(x)
        if _is_integral(e):
            n = int(e)
            if b == 0 and n < 0:
                raise DomainError(f"zero raised to a negative power at x={_show(x)}")
            try:
                return _finite(b ** n)
            except OverflowError:
                raise DomainError(f"overflow in power at x={_show(x)}") from None
        if b <= 0:
            raise DomainError(f"non-integer power of non-positive base at x={_show(x)}")
        try:
            return _finite(float(b) ** float(e))
        except OverflowError:
            raise DomainError(f"overflow in power at x={_show(x)}") from None

    def diff(self):
        b, e = self.base, self.exponent
        if isinstance(e, Const):
            return mul(mul(e, pow_(b, Const(e.value - 1))), b.diff())
        # d(b^e) = b^e * (e' log b + e b'/b)
        return mul(self, add(mul(e.diff(), Log(b)), div(mul(e, b.diff()), b)))


@dataclass(frozen=True)
class Call(Expr):
    arg: Expr
    name = ""

    def evaluate(self, x):
        v = float(self.arg.evaluate(x))
        try:
            out = self._apply(v)
        except (OverflowError, ValueError):
            raise DomainError(f"{self.name} undefined or overflowing at x={_show(x)}") from None
        return _finite(out)

    def _apply(self, v):
        raise NotImplementedError


@dataclass(frozen=True)
class Exp(Call):
    name = "exp"

    def _apply(self, v):
        return math.exp(v)

    def diff(self):
        return mul(self, self.arg.diff())


@dataclass(frozen=True)
class Log(Call):
    name = "log"

    def evaluate(self, x):
        v = self.arg.evaluate(x)
        if v <= 0:
            raise DomainError(f"log of non-positive value at x={_show(x)}")
        return math.log(v)

    def diff(self):
        return div(self.arg.diff(), self.arg)


@dataclass(frozen=True)
class Sin(Call):
    name = "sin"

    def _apply(self, v):
        return math.sin(v)

    def diff(self):
        return mul(Cos(self.arg), self.arg.diff())


@dataclass(frozen=True)
class Cos(Call):
    name = "cos"

    def _apply(self, v):
        return math.cos(v)

    def diff(self):
        return neg(mul(Sin(self.arg), self.arg.diff()))


FUNCTIONS = {"exp": Exp, "log": Log, "sin": Sin, "cos": Cos}
ZERO = Const(0)
ONE = Const(1)
X = Var()


def _is_integral(e) -> bool:
    if isinstance(e, Fraction):
        return e.denominator == 1
    if isinstance(e, int):
        return True
    return float(e).is_integer()


def _finite(v):
    if isinstance(v, float) and not math.isfinite(v):
        raise DomainError("result is not a finite number")
    return v


def _show(x) -> str:
    return repr(float(x))


def is_rational(e: Expr) -> bool:
    """True when evaluation at a rational point stays exact."""
    if isinstance(e, (Const, Var)):
        return True
    if isinstance(e, Call):
        return False
    if isinstance(e, Pow):
        return (isinstance(e.exponent, Const) and e.exponent.value.denominator == 1
                and is_rational(e.base))
    if isinstance(e, Neg):
        return is_rational(e.arg)
    return is_rational(e.left) and is_rational(e.right)


# -- smart constructors (constant folding only) -------------------------------

def _c(e):
    return e.value if isinstance(e, Const) else None


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a: Expr, b: Expr) -> Expr:
    ca, cb = _c(a), _c(b)
    if ca is not None and cb is not None:
        return Const(ca + cb)
    if ca == 0:
        return b
    if cb == 0:
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    ca, cb = _c(a), _c(b)
    if ca is not None and cb is not None:
        return Const(ca - cb)
    if cb == 0:
        return a
    if ca == 0:
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    ca, cb = _c(a), _c(b)
    if ca is not None and cb is not None:
        return Const(ca * cb)
    if ca == 0 or cb == 0:
        return ZERO
    if ca == 1:
        return b
    if cb == 1:
        return a
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    ca, cb = _c(a), _c(b)
    if ca is not None and cb is not None and cb != 0:
        return Const(ca / cb)
    if ca == 0 and cb != 0:
        return ZERO
    if cb == 1:
        return a
    return Div(a, b)


def pow_(a: Expr, b: Expr) -> Expr:
    cb = _c(b)
    if cb == 0:
        return ONE
    if cb == 1:
        return a
    return Pow(a, b)


# -- printing -------------------------------------------------------------------

def format_const(v: Fraction) -> str:
    """Shortest-ish exact decimal for ``v``; non-terminating values as ``(p/q)``."""
    if v < 0:
        return "(-" + format_const(-v) + ")"
    if v.denominator == 1:
        return str(v.numerator)
    den = v.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"({v.numerator}/{v.denominator})"
    digits = max(twos, fives) + len(str(v.numerator)) + 5
    with localcontext() as ctx:
        ctx.prec = digits
        d = (Decimal(v.numerator) / Decimal(v.denominator)).normalize()
    s = format(d, "f")
    if len(s) > 40:
        s = format(d, "e").replace("e", "E")
    return s


def to_source(e: Expr) -> str:
    """Print ``e`` with the minimal parentheses that re-parse to the same tree."""
    if isinstance(e, Const):
        return format_const(e.value)
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Call):
        return f"{e.name}({to_source(e.arg)})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, e.arg.prec < _NEG)
    if isinstance(e, Pow):
        base = _wrap(e.base, e.base.prec <= _POW)
        expo = _wrap(e.exponent, e.exponent.prec < _NEG)
        return f"{base}^{expo}"
    left = _wrap(e.left, e.left.prec < e.prec)
    right = _wrap(e.right, e.right.prec <= e.prec)
    return f"{left} {e.symbol} {right}"


def _wrap(e: Expr, paren: bool) -> str:
    s = to_source(e)
    return f"({s})" if paren else s
