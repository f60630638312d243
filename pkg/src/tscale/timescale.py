"""Time scales: finite unions of closed intervals and isolated points.

A :class:`TimeScale` is canonical by construction: components are sorted,
overlapping or touching intervals are merged and discrete points that fall
inside an interval are absorbed by it.  Points of a scale are addressed with
:class:`PointRef`, a structural handle (component index plus position), so
the jump operators never have to decide membership of a float by tolerance.
"""
from __future__ import annotations

import bisect
import enum
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .errors import (
    EmptyScale,
    InvalidComponent,
    InvalidRange,
    NotInScale,
    ScaleLiteralError,
)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __str__(self):
        return f"interval({_num(self.lo)},{_num(self.hi)})"


@dataclass(frozen=True)
class Points:
    values: tuple

    def __init__(self, values: Iterable[float]):
        object.__setattr__(self, "values", tuple(float(v) for v in values))

    def __str__(self):
        return "points(" + ",".join(_num(v) for v in self.values) + ")"


Component = Union[Interval, Points]


def _num(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(float(v))


class PointRef:
    """Handle to one point of a scale.

    ``index`` is the position inside a discrete block and ``None`` for a
    point of an interval component.  Equality, hashing and ordering use the
    dereferenced value only.
    """

    __slots__ = ("component", "index", "value")

    def __init__(self, component: int, index: int | None, value: float):
        self.component = component
        self.index = index
        self.value = float(value)

    @property
    def exact(self) -> Fraction:
        return Fraction(self.value)

    def __eq__(self, other):
        if isinstance(other, PointRef):
            return self.value == other.value
        return NotImplemented

    def __lt__(self, other):
        return self.value < other.value

    def __le__(self, other):
        return self.value <= other.value

    def __gt__(self, other):
        return self.value > other.value

    def __ge__(self, other):
        return self.value >= other.value

    def __hash__(self):
        return hash(self.value)

    def __float__(self):
        return self.value

    def __repr__(self):
        where = "interval" if self.index is None else f"#{self.index}"
        return f"PointRef({self.value!r} @ {self.component}{where})"


class Density(enum.Enum):
    DENSE = "DENSE"
    SCATTERED = "SCATTERED"


@dataclass(frozen=True)
class PointClass:
    right: Density
    left: Density


class TimeScale:
    """Immutable canonical time scale."""

    def __init__(self, components: Sequence[Component]):
        self.components: tuple[Component, ...] = tuple(components)
        self._starts = [_first_value(c) for c in self.components]

    # -- construction -------------------------------------------------------

    @classmethod
    def from_components(cls, raw: Iterable[Component]) -> "TimeScale":
        return make_scale(raw)

    def __eq__(self, other):
        return isinstance(other, TimeScale) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __str__(self):
        return "+".join(str(c) for c in self.components)

    def __repr__(self):
        return f"TimeScale({self})"

    # -- basic queries ------------------------------------------------------

    @property
    def min(self) -> PointRef:
        return self._first(0)

    @property
    def max(self) -> PointRef:
        return self._last(len(self.components) - 1)

    @property
    def is_discrete(self) -> bool:
        return all(isinstance(c, Points) for c in self.components)

    def __contains__(self, x) -> bool:
        try:
            self.point(x)
        except NotInScale:
            return False
        return True

    def point(self, x) -> PointRef:
        """Locate the real ``x`` (exact match for discrete points)."""
        if isinstance(x, PointRef):
            return x
        x = float(x)
        if not math.isfinite(x):
            raise NotInScale(x)
        ci = bisect.bisect_right(self._starts, x) - 1
        if ci < 0:
            raise NotInScale(x)
        comp = self.components[ci]
        if isinstance(comp, Interval):
            if comp.lo <= x <= comp.hi:
                return PointRef(ci, None, x)
            raise NotInScale(x)
        j = bisect.bisect_left(comp.values, x)
        if j < len(comp.values) and comp.values[j] == x:
            return PointRef(ci, j, x)
        raise NotInScale(x)

    def points(self) -> list[PointRef]:
        """Every point of a purely discrete scale, ascending."""
        if not self.is_discrete:
            raise ValueError("scale has interval components; use grid()")
        return [PointRef(ci, j, v)
                for ci, c in enumerate(self.components)
                for j, v in enumerate(c.values)]

    def _first(self, ci: int) -> PointRef:
        c = self.components[ci]
        if isinstance(c, Interval):
            return PointRef(ci, None, c.lo)
        return PointRef(ci, 0, c.values[0])

    def _last(self, ci: int) -> PointRef:
        c = self.components[ci]
        if isinstance(c, Interval):
            return PointRef(ci, None, c.hi)
        return PointRef(ci, len(c.values) - 1, c.values[-1])

    # -- jump operators -----------------------------------------------------

    def sigma(self, p) -> PointRef:
        p = self.point(p)
        comp = self.components[p.component]
        if isinstance(comp, Interval):
            if p.value < comp.hi:
                return p
        elif p.index + 1 < len(comp.values):
            return PointRef(p.component, p.index + 1, comp.values[p.index + 1])
        if p.component + 1 < len(self.components):
            return self._first(p.component + 1)
        return p

    def rho(self, p) -> PointRef:
        p = self.point(p)
        comp = self.components[p.component]
        if isinstance(comp, Interval):
            if p.value > comp.lo:
                return p
        elif p.index > 0:
            return PointRef(p.component, p.index - 1, comp.values[p.index - 1])
        if p.component > 0:
            return self._last(p.component - 1)
        return p

    def mu(self, p) -> Fraction:
        """Forward graininess, exact (difference of two binary floats)."""
        p = self.point(p)
        return self.sigma(p).exact - p.exact

    def nu(self, p) -> Fraction:
        """Backward graininess, exact."""
        p = self.point(p)
        return p.exact - self.rho(p).exact

    def classify(self, p) -> PointClass:
        p = self.point(p)
        right = Density.SCATTERED if self.sigma(p) > p else Density.DENSE
        left = Density.SCATTERED if self.rho(p) < p else Density.DENSE
        return PointClass(right, left)

    def in_interval(self, p) -> bool:
        return isinstance(self.components[self.point(p).component], Interval)

    # -- ranges -------------------------------------------------------------

    def grid(self, a=None, b=None, dense_samples: int = 0) -> list[PointRef]:
        """Evaluation grid for [a, b] on this scale.

        All discrete points in range are listed; every dense sub-segment
        contributes its two endpoints plus ``dense_samples`` equally spaced
        interior points.
        """
        a = self.min if a is None else self.point(a)
        b = self.max if b is None else self.point(b)
        if a > b:
            raise InvalidRange(f"grid range reversed: {a.value} > {b.value}")
        if dense_samples < 0:
            raise InvalidRange("dense_samples must be non-negative")
        out: list[PointRef] = []
        for ci in range(a.component, b.component + 1):
            comp = self.components[ci]
            if isinstance(comp, Points):
                for j, v in enumerate(comp.values):
                    if a.value <= v <= b.value:
                        out.append(PointRef(ci, j, v))
                continue
            lo, hi = max(comp.lo, a.value), min(comp.hi, b.value)
            out.append(PointRef(ci, None, lo))
            if hi > lo:
                n = dense_samples + 1
                for k in range(1, n):
                    t = lo + (hi - lo) * k / n
                    if out[-1].value < t < hi:
                        out.append(PointRef(ci, None, t))
                out.append(PointRef(ci, None, hi))
        return out

    def restrict(self, a, b) -> "TimeScale":
        """The scale intersected with [a, b]."""
        a, b = self.point(a), self.point(b)
        if a > b:
            raise InvalidRange(f"range reversed: {a.value} > {b.value}")
        comps: list[Component] = []
        for ci in range(a.component, b.component + 1):
            comp = self.components[ci]
            if isinstance(comp, Points):
                comps.append(Points(v for v in comp.values if a.value <= v <= b.value))
            else:
                lo, hi = max(comp.lo, a.value), min(comp.hi, b.value)
                comps.append(Interval(lo, hi) if hi > lo else Points([lo]))
        return make_scale(comps)


def _first_value(c: Component) -> float:
    return c.lo if isinstance(c, Interval) else c.values[0]


def make_scale(raw: Iterable[Component]) -> TimeScale:
    """Canonicalize a list of raw components into a :class:`TimeScale`."""
    intervals: list[tuple[float, float]] = []
    points: list[float] = []
    for comp in raw:
        if isinstance(comp, Interval):
            lo, hi = float(comp.lo), float(comp.hi)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise InvalidComponent(f"interval bounds must be finite: {comp}")
            if lo > hi:
                raise InvalidComponent(f"interval with lo > hi: ({lo}, {hi})")
            if lo == hi:
                points.append(lo)
            else:
                intervals.append((lo, hi))
        elif isinstance(comp, Points):
            for v in comp.values:
                if not math.isfinite(v):
                    raise InvalidComponent(f"non-finite point {v!r}")
                points.append(v)
        else:
            raise InvalidComponent(f"unknown component {comp!r}")
    if not intervals and not points:
        raise EmptyScale("a time scale needs at least one point")

    intervals.sort()
    merged: list[list[float]] = []
    for lo, hi in intervals:
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])

    starts = [m[0] for m in merged]

    def absorbed(x):
        i = bisect.bisect_right(starts, x) - 1
        return i >= 0 and merged[i][0] <= x <= merged[i][1]

    free = sorted({x for x in points if not absorbed(x)})

    comps: list[Component] = []
    block: list[float] = []
    ii = 0
    for x in free:
        while ii < len(merged) and merged[ii][1] < x:
            if block:
                comps.append(Points(block))
                block = []
            comps.append(Interval(*merged[ii]))
            ii += 1
        block.append(x)
    if block:
        comps.append(Points(block))
    comps.extend(Interval(lo, hi) for lo, hi in merged[ii:])
    return TimeScale(comps)


# -- literal syntax -----------------------------------------------------------

_TERM = re.compile(r"\s*(interval|points|lattice|qscale)\s*\(([^()]*)\)\s*")


def _literal_number(tok: str, where: str) -> Fraction:
    try:
        return Fraction(tok.strip())
    except (ValueError, ZeroDivisionError):
        raise ScaleLiteralError(f"bad number {tok.strip()!r} in {where}") from None


def parse_scale(text: str) -> TimeScale:
    """Parse ``interval(a,b)+points(p,...)+lattice(start,step,count)+qscale(q,start,count)``."""
    if not text or not text.strip():
        raise ScaleLiteralError("empty scale literal")
    comps: list[Component] = []
    pos = 0
    while True:
        m = _TERM.match(text, pos)
        if not m:
            raise ScaleLiteralError(f"cannot parse scale literal at offset {pos}: {text[pos:]!r}")
        name, body = m.group(1), m.group(2)
        args = [_literal_number(t, name) for t in body.split(",")] if body.strip() else []
        comps.append(_build_component(name, args))
        pos = m.end()
        if pos == len(text):
            break
        if text[pos] != "+":
            raise ScaleLiteralError(f"expected '+' at offset {pos} in {text!r}")
        pos += 1
    return make_scale(comps)


def _count(v: Fraction, name: str) -> int:
    if v.denominator != 1 or v < 1:
        raise ScaleLiteralError(f"{name}: count must be a positive integer")
    return int(v)


def _build_component(name: str, args: list[Fraction]) -> Component:
    if name == "interval":
        if len(args) != 2:
            raise ScaleLiteralError("interval(lo,hi) takes two numbers")
        if args[0] > args[1]:
            raise ScaleLiteralError(f"interval({args[0]},{args[1]}): lo > hi")
        return Interval(float(args[0]), float(args[1]))
    if name == "points":
        if not args:
            raise ScaleLiteralError("points() needs at least one value")
        return Points(float(a) for a in args)
    if name == "lattice":
        if len(args) != 3:
            raise ScaleLiteralError("lattice(start,step,count) takes three numbers")
        start, step, count = args
        if step <= 0:
            raise ScaleLiteralError("lattice step must be positive")
        return Points(float(start + k * step) for k in range(_count(count, name)))
    if len(args) != 3:
        raise ScaleLiteralError("qscale(q,start,count) takes three numbers")
    q, start, count = args
    if q <= 1 or start <= 0:
        raise ScaleLiteralError("qscale needs q > 1 and start > 0")
    return Points(float(start * q ** k) for k in range(_count(count, name)))
