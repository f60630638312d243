"""Delta, nabla and diamond-alpha calculus on a :class:`TimeScale`.

Scattered sides use the difference quotients directly.  Because graininess
is computed exactly (as a :class:`~fractions.Fraction`) and table values are
stored as fractions, every derivative of rational data on a discrete scale
is exact.  Dense sides use the symbolic derivative of the function's
expression when one is available, and otherwise a one-sided difference
quotient refined by Richardson extrapolation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Real
from typing import Callable, Mapping, Optional

from scipy import integrate

from . import expr as ex
from .errors import (
    InvalidRange,
    MissingSample,
    NumericLimitFailure,
    OutsideKappaDomain,
    QuadratureError,
    TableOnDense,
    ZeroDenominator,
)
from .parser import parse_expr
from .timescale import Interval, PointRef, TimeScale

# Dense-point numeric limits.
RICHARDSON_H0 = 1e-4
RICHARDSON_LEVELS = 4
RICHARDSON_RTOL = 1e-8
# Riemann integrals on interval components.
QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12


def exact(v) -> Real:
    """Convert ints and floats to an exact Fraction; leave Fractions alone."""
    if isinstance(v, Fraction):
        return v
    return Fraction(v)


@dataclass(frozen=True)
class DerivKind:
    """Which derivative: ``delta``, ``nabla`` or ``diamond`` with weight ``alpha``."""

    kind: str
    alpha: Fraction = Fraction(0)

    def __post_init__(self):
        if self.kind not in ("delta", "nabla", "diamond"):
            raise ValueError(f"unknown derivative kind {self.kind!r}")
        a = Fraction(self.alpha)
        if not 0 <= a <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        object.__setattr__(self, "alpha", a)

    @classmethod
    def delta(cls):
        return cls("delta", Fraction(1))

    @classmethod
    def nabla(cls):
        return cls("nabla", Fraction(0))

    @classmethod
    def diamond(cls, alpha):
        return cls("diamond", Fraction(alpha))

    @classmethod
    def parse(cls, name: str, alpha=None) -> "DerivKind":
        name = name.strip().lower()
        if name == "delta":
            return cls.delta()
        if name == "nabla":
            return cls.nabla()
        if name == "diamond":
            if alpha is None:
                raise ValueError("diamond derivative needs alpha")
            return cls.diamond(alpha)
        raise ValueError(f"unknown derivative kind {name!r}")

    @property
    def weights(self) -> tuple[Fraction, Fraction]:
        """(weight of delta, weight of nabla)."""
        if self.kind == "delta":
            return Fraction(1), Fraction(0)
        if self.kind == "nabla":
            return Fraction(0), Fraction(1)
        return self.alpha, 1 - self.alpha

    def __str__(self):
        if self.kind == "diamond":
            return f"diamond({float(self.alpha):g})"
        return self.kind


DELTA = DerivKind.delta()
NABLA = DerivKind.nabla()


# -- functions on a scale ------------------------------------------------------

class ScaleFunction:
    """A real-valued function on the points of a time scale."""

    label = "f"

    def value(self, p: PointRef) -> Real:
        raise NotImplementedError

    def symbolic(self, ts: TimeScale, p: PointRef, side: int) -> Optional[ex.Expr]:
        """An expression equal to this function on a one-sided neighbourhood of ``p``.

        ``side`` is +1 (right) or -1 (left).  ``None`` when no such expression
        is known, in which case dense-point limits are taken numerically.
        """
        return None

    def __call__(self, p):
        return self.value(p)

    def __neg__(self):
        return Derived(lambda p: -self.value(p), _lift1(self, ex.neg), f"-({self.label})")

    def __add__(self, other):
        return _binary(self, other, "+", lambda a, b: a + b, ex.add)

    def __sub__(self, other):
        return _binary(self, other, "-", lambda a, b: a - b, ex.sub)

    def __mul__(self, other):
        return _binary(self, other, "*", lambda a, b: a * b, ex.mul)

    def __truediv__(self, other):
        return quotient(self, other)


class ExprFunction(ScaleFunction):
    """Function given by an expression in ``x``."""

    def __init__(self, expr, source: str | None = None):
        if isinstance(expr, str):
            source = expr
            expr = parse_expr(expr).tree
        self.expr: ex.Expr = expr
        self.source = source if source is not None else ex.to_source(expr)
        self._rational = ex.is_rational(expr)

    @property
    def label(self):
        return self.source

    def value(self, p):
        x = Fraction(p.value) if self._rational else float(p)
        return self.expr.evaluate(x)

    def value_at(self, x: float):
        return self.expr.evaluate(Fraction(x) if self._rational else float(x))

    def symbolic(self, ts, p, side):
        return self.expr

    def __neg__(self):
        return ExprFunction(ex.Neg(self.expr))

    def __repr__(self):
        return f"ExprFunction({self.source!r})"


class TableFunction(ScaleFunction):
    """Function given by its values at the points of a discrete scale.

    Values are stored as exact fractions, so calculus on tables is exact.
    """

    label = "table"

    def __init__(self, values: Mapping, scale: TimeScale | None = None):
        if scale is not None and not scale.is_discrete:
            raise TableOnDense("table functions need a purely discrete scale")
        self.values: dict[float, Fraction] = {
            float(k): exact(v) for k, v in values.items()
        }
        self.scale = scale

    def value(self, p):
        try:
            return self.values[float(p)]
        except KeyError:
            raise MissingSample(f"table has no value at t={float(p)!r}") from None

    def __neg__(self):
        return TableFunction({k: -v for k, v in self.values.items()}, self.scale)

    def items(self):
        return sorted(self.values.items())

    def __eq__(self, other):
        return isinstance(other, TableFunction) and self.values == other.values

    def __repr__(self):
        return f"TableFunction({len(self.values)} points)"


class Derived(ScaleFunction):
    """Pointwise combination of other scale functions."""

    def __init__(self, fn: Callable[[PointRef], Real],
                 sym: Callable | None = None, label: str = "derived"):
        self.fn = fn
        self.sym = sym
        self.label = label

    def value(self, p):
        return self.fn(p)

    def symbolic(self, ts, p, side):
        return self.sym(ts, p, side) if self.sym is not None else None

    def __repr__(self):
        return f"Derived({self.label})"


def _lift1(f: ScaleFunction, op):
    def sym(ts, p, side):
        e = f.symbolic(ts, p, side)
        return None if e is None else op(e)
    return sym


def _lift2(f: ScaleFunction, g: ScaleFunction, op):
    def sym(ts, p, side):
        a = f.symbolic(ts, p, side)
        if a is None:
            return None
        b = g.symbolic(ts, p, side)
        return None if b is None else op(a, b)
    return sym


def as_function(v) -> ScaleFunction:
    if isinstance(v, ScaleFunction):
        return v
    if isinstance(v, str):
        return ExprFunction(v)
    if isinstance(v, ex.Expr):
        return ExprFunction(v)
    if isinstance(v, Real):
        return ExprFunction(ex.Const(exact(v)))
    raise TypeError(f"cannot use {v!r} as a scale function")


def _binary(f, g, symbol, op, sym_op):
    g = as_function(g)
    if isinstance(f, ExprFunction) and isinstance(g, ExprFunction):
        return ExprFunction(sym_op(f.expr, g.expr))
    if isinstance(f, TableFunction) and isinstance(g, TableFunction):
        keys = f.values.keys() & g.values.keys()
        return TableFunction({k: op(f.values[k], g.values[k]) for k in keys}, f.scale or g.scale)
    return Derived(lambda p: op(f.value(p), g.value(p)), _lift2(f, g, sym_op),
                   f"({f.label}){symbol}({g.label})")


def quotient(f: ScaleFunction, g: ScaleFunction, label: str | None = None) -> ScaleFunction:
    """``f/g`` raising :class:`ZeroDenominator` where ``g`` vanishes."""
    g = as_function(g)

    def fn(p):
        den = g.value(p)
        if den == 0:
            raise ZeroDenominator(f"denominator {g.label} vanishes at t={float(p)!r}", float(p))
        return f.value(p) / den

    return Derived(fn, _lift2(f, g, ex.div), label or f"({f.label})/({g.label})")


def tabulate(f: ScaleFunction, ts: TimeScale, points=None) -> TableFunction:
    """Freeze ``f`` into a table over all (or the given) points of a discrete scale."""
    pts = ts.points() if points is None else points
    return TableFunction({p.value: f.value(p) for p in pts}, ts)


# -- derivatives ---------------------------------------------------------------

@lru_cache(maxsize=4096)
def symbolic_derivative(e: ex.Expr) -> ex.Expr:
    return e.diff()


def _eval_expr(e: ex.Expr, t: float):
    return e.evaluate(Fraction(t) if ex.is_rational(e) else t)


def deriv(f: ScaleFunction, ts: TimeScale, p, k: DerivKind = NABLA) -> Real:
    """The ``k``-derivative of ``f`` at ``p``.

    The diamond derivative is ``alpha*delta + (1-alpha)*nabla``; a term with
    zero weight is not evaluated, so ``diamond(1)`` is the delta derivative
    and ``diamond(0)`` the nabla derivative, bit for bit.
    """
    p = ts.point(p)
    wd, wn = k.weights
    if not wn:
        return _delta(f, ts, p)
    if not wd:
        return _nabla(f, ts, p)
    return wd * _delta(f, ts, p) + wn * _nabla(f, ts, p)


def _delta(f, ts, p):
    s = ts.sigma(p)
    if s > p:
        return (f.value(s) - f.value(p)) / (s.exact - p.exact)
    if not ts.in_interval(p):
        raise OutsideKappaDomain(f"delta derivative undefined at the isolated maximum t={p.value!r}")
    return _dense_limit(f, ts, p, +1)


def _nabla(f, ts, p):
    r = ts.rho(p)
    if r < p:
        return (f.value(p) - f.value(r)) / (p.exact - r.exact)
    if not ts.in_interval(p):
        raise OutsideKappaDomain(f"nabla derivative undefined at the isolated minimum t={p.value!r}")
    return _dense_limit(f, ts, p, -1)


def _dense_limit(f, ts, p, side):
    if isinstance(f, TableFunction):
        raise TableOnDense(f"table function queried at dense point t={p.value!r}")
    e = f.symbolic(ts, p, side)
    if e is not None:
        return _eval_expr(symbolic_derivative(e), p.value)
    return richardson_limit(f, ts, p, side)


def richardson_limit(f: ScaleFunction, ts: TimeScale, p: PointRef, side: int) -> float:
    """One-sided difference quotient at a dense point, Richardson-extrapolated.

    Steps start at ``h0 = 1e-4*(1+|t|)`` (rounded down to a power of two and
    clipped to the component) and halve for four levels.  Falls back to the
    other side when ``p`` is the endpoint of its interval.
    """
    comp = ts.components[p.component]
    if not isinstance(comp, Interval):
        raise OutsideKappaDomain(f"no dense neighbourhood at t={p.value!r}")
    t = p.value
    room = comp.hi - t if side > 0 else t - comp.lo
    if room <= 0:
        side = -side
        room = comp.hi - t if side > 0 else t - comp.lo
    if room <= 0:
        raise OutsideKappaDomain(f"no dense neighbourhood at t={t!r}")
    h = 2.0 ** math.floor(math.log2(min(RICHARDSON_H0 * (1 + abs(t)), room)))
    f0 = float(f.value(p))
    table: list[list[float]] = []
    for level in range(RICHARDSON_LEVELS):
        hk = h / 2 ** level
        q = min(max(t + side * hk, comp.lo), comp.hi)
        row = [(float(f.value(PointRef(p.component, None, q))) - f0) / (q - t)]
        for j in range(1, level + 1):
            prev = row[j - 1]
            row.append(prev + (prev - table[level - 1][j - 1]) / (2 ** j - 1))
        table.append(row)
    best, last = table[-1][-1], table[-2][-2]
    if not math.isfinite(best) or abs(best - last) > RICHARDSON_RTOL * max(1.0, abs(best)):
        raise NumericLimitFailure(
            f"one-sided limit at t={t!r} did not converge ({last!r} vs {best!r})")
    return best


class DerivativeFunction(ScaleFunction):
    """``q -> deriv(f, ts, q, k)`` as a scale function (for second derivatives)."""

    def __init__(self, f: ScaleFunction, ts: TimeScale, k: DerivKind):
        self.f, self.ts, self.k = f, ts, k
        self.label = f"{f.label}^{k}"

    def value(self, p):
        return deriv(self.f, self.ts, p, self.k)

    def symbolic(self, ts, p, side):
        if not ts.in_interval(p):
            return None
        sides = {side}
        wd, wn = self.k.weights
        if wd:
            if ts.sigma(p) != p:
                return None
            sides.add(+1)
        if wn:
            if ts.rho(p) != p:
                return None
            sides.add(-1)
        exprs = {self.f.symbolic(ts, p, s) for s in sides}
        if len(exprs) != 1 or None in exprs:
            return None
        return symbolic_derivative(exprs.pop())


def deriv2(f: ScaleFunction, ts: TimeScale, p, k1: DerivKind, k2: DerivKind) -> Real:
    """``k2`` applied to the ``k1``-derivative of ``f`` (``f^{k1 k2}``)."""
    return deriv(DerivativeFunction(f, ts, k1), ts, p, k2)


# -- integrals -----------------------------------------------------------------

def integral(f: ScaleFunction, ts: TimeScale, a, b, k: DerivKind = NABLA) -> Real:
    """Delta, nabla or diamond-alpha integral of ``f`` over ``[a, b]``.

    Gaps between consecutive points contribute ``f(left)*gap`` (delta) or
    ``f(right)*gap`` (nabla); interval components contribute their Riemann
    integral.  Purely discrete contributions are summed exactly.
    """
    a, b = ts.point(a), ts.point(b)
    if a > b:
        raise InvalidRange(f"integral bounds reversed: {a.value} > {b.value}")
    wd, wn = k.weights
    gap_delta = gap_nabla = Fraction(0)
    dense = 0.0
    has_dense = False
    for ci in range(a.component, b.component + 1):
        comp = ts.components[ci]
        if isinstance(comp, Interval):
            lo, hi = max(comp.lo, a.value), min(comp.hi, b.value)
            if hi > lo:
                dense += _riemann(f, ci, lo, hi)
                has_dense = True
            lefts = [PointRef(ci, None, hi)] if a.value <= comp.hi < b.value else []
        else:
            lefts = [PointRef(ci, j, v) for j, v in enumerate(comp.values)
                     if a.value <= v < b.value]
        for u in lefts:
            s = ts.sigma(u)
            gap = s.exact - u.exact
            if wd:
                gap_delta += f.value(u) * gap
            if wn:
                gap_nabla += f.value(s) * gap
    if wn == 0:
        total = gap_delta
    elif wd == 0:
        total = gap_nabla
    else:
        total = wd * gap_delta + wn * gap_nabla
    return total + dense if has_dense else total


def _riemann(f, ci, lo, hi) -> float:
    if isinstance(f, ExprFunction):
        fn = lambda x: float(f.value_at(x))  # noqa: E731
    else:
        fn = lambda x: float(f.value(PointRef(ci, None, x)))  # noqa: E731
    res = integrate.quad(fn, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL,
                         limit=200, full_output=1)
    if len(res) > 3:
        raise QuadratureError(f"quadrature on [{lo}, {hi}] did not converge: {res[3]}")
    return res[0]


def nabla_antiderivative(table: ScaleFunction, ts: TimeScale, a, c0=0) -> TableFunction:
    """Table ``F`` with ``F(a) = c0`` and ``F^nabla = table`` right of ``a``.

    Built by ``F(t) = F(rho(t)) + table(t)*nu(t)`` in exact arithmetic, so
    the nabla derivative of the result reproduces ``table`` exactly.
    """
    if not ts.is_discrete:
        raise TableOnDense("nabla antiderivative needs a purely discrete scale")
    a = ts.point(a)
    out = {a.value: exact(c0)}
    prev = a
    for q in ts.points():
        if q <= a:
            continue
        out[q.value] = out[prev.value] + exact(table.value(q)) * (q.exact - prev.exact)
        prev = q
    return TableFunction(out, ts)


def zero_check(v, what: str, where) -> None:
    if v == 0:
        raise ZeroDenominator(f"{what} vanishes at t={float(where)!r}", float(where))
