"""Seeded random instances with known derivative-ratio structure.

Random numbers come from SplitMix64, written out here so instances can be
reproduced by any implementation of the same generator::

    state = (state + 0x9E3779B97F4A7C15) mod 2^64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    return z ^ (z >> 31)

Integers in ``[lo, hi]`` are ``lo + next() % (hi - lo + 1)``; uniform reals
are ``(next() >> 11) * 2^-53`` scaled to the range; random rationals are
dyadic (denominator ``2^8``) so exact tables stay small.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .calculus import (
    NABLA,
    ExprFunction,
    ScaleFunction,
    TableFunction,
    as_function,
    deriv,
    nabla_antiderivative,
)
from .errors import ConfigError, InvalidRange, TableOnDense, ZeroDenominator
from .timescale import Points, PointRef, TimeScale, make_scale, parse_scale
from .rules import RULE_IDS as RULES
from .yfunction import FunctionPair, y_nabla

_MASK = (1 << 64) - 1
_DYADIC_BITS = 8


class SplitMix64:
    GAMMA = 0x9E3779B97F4A7C15
    MIX1 = 0xBF58476D1CE4E5B9
    MIX2 = 0x94D049BB133111EB

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + self.GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * self.MIX1) & _MASK
        z = ((z ^ (z >> 27)) * self.MIX2) & _MASK
        return z ^ (z >> 31)

    def randint(self, lo: int, hi: int) -> int:
        """Integer in ``[lo, hi]``."""
        return lo + self.next_u64() % (hi - lo + 1)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (self.next_u64() >> 11) * 2.0 ** -53 * (hi - lo)

    def dyadic(self, lo, hi, bits: int = _DYADIC_BITS) -> Fraction:
        """Multiple of ``2^-bits`` in ``[lo, hi]``."""
        scale = 1 << bits
        k_lo = -((-Fraction(lo) * scale).__floor__())
        k_hi = (Fraction(hi) * scale).__floor__()
        return Fraction(self.randint(k_lo, k_hi), scale)

    def choice(self, seq):
        return seq[self.randint(0, len(seq) - 1)]

    def fork(self) -> "SplitMix64":
        return SplitMix64(self.next_u64())


class RatioProfile(enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"
    CONSTANT = "constant"
    UNIMODAL_UP = "unimodal_up"
    UNIMODAL_DOWN = "unimodal_down"


class PsiProfile(enum.Enum):
    POSITIVE_INCREASING = "positive_increasing"
    POSITIVE_DECREASING = "positive_decreasing"
    SIGNED_INCREASING = "signed_increasing"


@dataclass(frozen=True)
class GenConfig:
    seed: int
    n_points: tuple[int, int] = (5, 50)
    coord_range: tuple[float, float] = (0.0, 10.0)
    ratio_profile: RatioProfile = RatioProfile.INCREASING
    psi_profile: PsiProfile = PsiProfile.POSITIVE_INCREASING

    def __post_init__(self):
        lo, hi = self.n_points
        if lo < 3 or hi < lo:
            raise ConfigError(f"n_points must satisfy 3 <= lo <= hi, got {self.n_points}")
        c0, c1 = self.coord_range
        if not c0 < c1:
            raise ConfigError(f"coord_range must be increasing, got {self.coord_range}")
        object.__setattr__(self, "ratio_profile", RatioProfile(self.ratio_profile))
        object.__setattr__(self, "psi_profile", PsiProfile(self.psi_profile))

    def rng(self, stream: int = 0) -> SplitMix64:
        """Independent generator for one construction step."""
        return SplitMix64(SplitMix64(self.seed ^ (stream * 0x9E3779B97F4A7C15)).next_u64())


def _round12(x: float) -> float:
    return float(f"{x:.12g}")


def gen_finite_scale(cfg: GenConfig) -> TimeScale:
    """Purely discrete scale with a random number of random points."""
    rng = cfg.rng(1)
    n = rng.randint(*cfg.n_points)
    lo, hi = cfg.coord_range
    pts: set[float] = set()
    while len(pts) < n:
        x = _round12(rng.uniform(lo, hi))
        if lo <= x <= hi:
            pts.add(x)
    return make_scale([Points(sorted(pts))])


# -- profiles ------------------------------------------------------------------------

def psi_table(ts: TimeScale, profile: PsiProfile, rng: SplitMix64) -> TableFunction:
    """Exact table for a psi profile on a discrete scale.

    Increasing and decreasing profiles are affine, quadratic or geometric
    in the point index; the signed profile is ``c (t - m)`` with ``m``
    halfway between two neighbouring points, so it never vanishes on the grid.
    """
    pts = ts.points()
    ts_ = [p.exact for p in pts]
    t0, t1 = ts_[0], ts_[-1]
    profile = PsiProfile(profile)
    if profile is PsiProfile.SIGNED_INCREASING:
        j = rng.randint(0, len(pts) - 2)
        m = (ts_[j] + ts_[j + 1]) / 2
        c = rng.dyadic(Fraction(1, 4), 2)
        vals = [c * (t - m) for t in ts_]
    else:
        c0 = rng.dyadic(Fraction(1, 2), 4)
        c1 = rng.dyadic(Fraction(1, 8), 2)
        form = rng.randint(0, 2)
        if profile is PsiProfile.POSITIVE_INCREASING:
            u = [t - t0 for t in ts_]
        else:
            u = [t1 - t for t in ts_]
        if form == 0:
            vals = [c0 + c1 * x for x in u]
        elif form == 1:
            vals = [c0 + c1 * x * x for x in u]
        else:
            q = 1 + rng.dyadic(Fraction(1, 16), Fraction(1, 2))
            if profile is PsiProfile.POSITIVE_DECREASING:
                q = 1 / q
            vals = [c0 * q ** i for i in range(len(pts))]
    return TableFunction({p.value: v for p, v in zip(pts, vals)}, ts)


def ratio_table(ts: TimeScale, profile: RatioProfile, rng: SplitMix64) -> TableFunction:
    """Exact monotone (or constant) ratio table built from dyadic increments."""
    pts = ts.points()
    profile = RatioProfile(profile)
    r = rng.dyadic(-2, 2)
    vals = []
    for _ in pts:
        vals.append(r)
        step = rng.dyadic(Fraction(1, 1 << _DYADIC_BITS), 1)
        if profile is RatioProfile.INCREASING:
            r += step
        elif profile is RatioProfile.DECREASING:
            r -= step
        elif profile is not RatioProfile.CONSTANT:
            raise ConfigError(f"ratio_table handles monotone profiles, not {profile.value}")
    return TableFunction({p.value: v for p, v in zip(pts, vals)}, ts)


def tent_table(ts: TimeScale, peak: PointRef, height, left_slope, right_slope,
               up: bool = True) -> TableFunction:
    """``height - slope*|t - peak|`` (or its mirror when ``up`` is false)."""
    pv = peak.exact if isinstance(peak, PointRef) else Fraction(peak)
    vals = {}
    for p in ts.points():
        t = p.exact
        bump = left_slope * (pv - t) if t <= pv else right_slope * (t - pv)
        vals[p.value] = height - bump if up else height + bump
    return TableFunction(vals, ts)


def random_table(ts: TimeScale, rng: SplitMix64, lo=-4, hi=4) -> TableFunction:
    return TableFunction({p.value: rng.dyadic(lo, hi) for p in ts.points()}, ts)


# -- pairs -----------------------------------------------------------------------------

def gen_pair_with_ratio(ts: TimeScale, r, psi, phi_at_min=0) -> FunctionPair:
    """Pair whose nabla derivative ratio is exactly ``r``.

    ``phi`` is the nabla antiderivative of ``r * psi^nabla`` starting from
    ``phi_at_min``, so ``phi^nabla / psi^nabla = r`` at every point right
    of the minimum.
    """
    if not ts.is_discrete:
        raise TableOnDense("gen_pair_with_ratio needs a purely discrete scale")
    r, psi = as_function(r), as_function(psi)
    products = {}
    for p in ts.points()[1:]:
        d = deriv(psi, ts, p, NABLA)
        if d == 0:
            raise ZeroDenominator(f"psi^nabla vanishes at t={p.value!r}", p.value)
        products[p.value] = _exact_value(r, p) * d
    products[ts.min.value] = 0
    phi = nabla_antiderivative(TableFunction(products, ts), ts, ts.min, phi_at_min)
    if not isinstance(psi, TableFunction):
        psi = TableFunction({p.value: _exact_value(psi, p) for p in ts.points()}, ts)
    return FunctionPair(phi, psi, ts)


def _exact_value(f: ScaleFunction, p: PointRef):
    if isinstance(f, ExprFunction):
        return f.value_at(p.exact)
    return f.value(p)


def gen_unimodal_ratio_pair(ts: TimeScale, peak, cfg: GenConfig, height=None,
                            slopes=None) -> FunctionPair:
    """Pair with ``phi(min) = psi(min) = 0`` and a tent-shaped ratio peaking at ``peak``.

    ``cfg.ratio_profile`` ``UNIMODAL_DOWN`` gives the inverted tent.  psi is
    the configured profile shifted to vanish at the minimum.
    """
    if not ts.is_discrete:
        raise TableOnDense("gen_unimodal_ratio_pair needs a purely discrete scale")
    peak = ts.point(peak)
    if not ts.min < peak < ts.max:
        raise InvalidRange(f"peak {peak.value} must be an interior point")
    rng = cfg.rng(3)
    if height is None:
        height = rng.dyadic(-2, 2)
    if slopes is None:
        ls = rng.dyadic(Fraction(1, 8), 2)
        slopes = (ls, ls * Fraction(2) ** rng.randint(-3, 3))
    up = cfg.ratio_profile is not RatioProfile.UNIMODAL_DOWN
    r = tent_table(ts, peak, Fraction(height), Fraction(slopes[0]), Fraction(slopes[1]), up)
    base = psi_table(ts, cfg.psi_profile, cfg.rng(2))
    shift = base.value(ts.min)
    psi = TableFunction({t: v - shift for t, v in base.items()}, ts)
    return gen_pair_with_ratio(ts, r, psi, 0)


# -- per-rule instances ---------------------------------------------------------------

ALPHAS = (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1))



@dataclass
class Instance:
    """A pair plus the parameters a rule check needs."""

    rule: str
    pair: FunctionPair
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None

    def to_dict(self):
        return {
            "rule": self.rule,
            "seed": self.seed,
            "scale": str(self.pair.scale),
            "phi": function_to_json(self.pair.phi),
            "psi": function_to_json(self.pair.psi),
            "params": {k: _json_param(v) for k, v in self.params.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _json_param(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, PointRef):
        return v.value
    return v


def function_to_json(f: ScaleFunction) -> dict:
    if isinstance(f, TableFunction):
        return {"table": {repr(t): str(v) for t, v in f.items()}}
    if isinstance(f, ExprFunction):
        return {"expr": str(f.expr)}
    raise ConfigError(f"cannot serialize {f!r}")


def function_from_json(obj, ts: TimeScale) -> ScaleFunction:
    if isinstance(obj, str):
        return ExprFunction(obj)
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ConfigError("function must be an expression string, {'expr': ...} or {'table': ...}")
    if "expr" in obj:
        return ExprFunction(obj["expr"])
    if "table" in obj:
        try:
            values = {float(t): Fraction(v) for t, v in obj["table"].items()}
        except (TypeError, ValueError, ZeroDivisionError) as e:
            raise ConfigError(f"bad table entry: {e}") from None
        return TableFunction(values, ts)
    raise ConfigError(f"unknown function encoding {sorted(obj)}")


def instance_from_dict(d: dict) -> Instance:
    try:
        ts = parse_scale(d["scale"])
        pair = FunctionPair(function_from_json(d["phi"], ts), function_from_json(d["psi"], ts), ts)
    except KeyError as e:
        raise ConfigError(f"instance is missing field {e}") from None
    params = dict(d.get("params") or {})
    if "alpha" in params and params["alpha"] is not None:
        params["alpha"] = Fraction(params["alpha"])
    return Instance(d.get("rule", ""), pair, params, d.get("seed"))


def rule_instance(rule: str, seed: int, case: Optional[int] = None,
                  ratio: Optional[RatioProfile] = None, psi: Optional[PsiProfile] = None,
                  alpha=None, n_points=(5, 50)) -> Instance:
    """Random instance satisfying the rule's hypotheses by construction.

    Profiles, case and alpha left as ``None`` are drawn from the seed.
    """
    rng = SplitMix64(seed)
    pick = rng.fork()
    monotone = (RatioProfile.INCREASING, RatioProfile.DECREASING)

    def cfg(ratio_default, psi_choices):
        return GenConfig(seed, n_points, (0.0, 10.0), ratio or ratio_default,
                         psi or pick.choice(psi_choices))

    positive = (PsiProfile.POSITIVE_INCREASING, PsiProfile.POSITIVE_DECREASING)
    every = tuple(PsiProfile)

    if rule == "MR2.1":
        c = cfg(pick.choice(monotone + monotone + (RatioProfile.CONSTANT,)), every)
        ts = gen_finite_scale(c)
        pair = gen_pair_with_ratio(ts, ratio_table(ts, c.ratio_profile, c.rng(4)),
                                   psi_table(ts, c.psi_profile, c.rng(2)), pick.dyadic(-2, 2))
        return Instance(rule, pair, {"anchor": pick.choice(("alpha", "beta"))}, seed)

    if rule == "Prop2.2":
        c = cfg(pick.choice(monotone + monotone + (RatioProfile.CONSTANT,)), positive)
        ts = gen_finite_scale(c)
        pair = gen_pair_with_ratio(ts, ratio_table(ts, c.ratio_profile, c.rng(4)),
                                   psi_table(ts, c.psi_profile, c.rng(2)), pick.dyadic(-2, 2))
        if pick.randint(0, 1):
            pair = pair.negated(psi=True)
        return Instance(rule, pair, {}, seed)

    if rule == "MR2.2":
        case = case or pick.randint(1, 4)
        default = {3: RatioProfile.INCREASING, 4: RatioProfile.DECREASING}.get(case)
        c = cfg(default or pick.choice(monotone), positive)
        ts = gen_finite_scale(c)
        pair = gen_pair_with_ratio(ts, ratio_table(ts, c.ratio_profile, c.rng(4)),
                                   psi_table(ts, c.psi_profile, c.rng(2)), 0)
        shift = _mr22_shift(pair, case, c.ratio_profile, pick)
        phi = TableFunction({t: v + shift for t, v in pair.phi.items()}, ts)
        return Instance(rule, FunctionPair(phi, pair.psi, ts), {"case": case}, seed)

    if rule == "MR2.3":
        c = cfg(pick.choice((RatioProfile.UNIMODAL_UP, RatioProfile.UNIMODAL_DOWN)), every)
        ts = gen_finite_scale(c)
        pts = ts.points()
        peak = pts[pick.randint(1, len(pts) - 2)]
        pair = gen_unimodal_ratio_pair(ts, peak, c)
        return Instance(rule, pair, {"p_split": peak.value}, seed)

    if rule == "Prop3.2":
        c = cfg(pick.choice(monotone + monotone + (RatioProfile.CONSTANT,)), positive)
        ts = gen_finite_scale(c)
        big_r = ratio_table(ts, c.ratio_profile, c.rng(4))
        psi_t = psi_table(ts, c.psi_profile, c.rng(2))
        if pick.randint(0, 1):
            psi_t = -psi_t
        phi = TableFunction({t: big_r.values[t] * v for t, v in psi_t.items()}, ts)
        return Instance(rule, FunctionPair(phi, psi_t, ts),
                        {"alpha": _alpha(alpha, pick)}, seed)

    if rule == "MR3.1":
        c = cfg(pick.choice(monotone + monotone + (RatioProfile.CONSTANT,)), every)
        ts = gen_finite_scale(c)
        pair = gen_pair_with_ratio(ts, ratio_table(ts, c.ratio_profile, c.rng(4)),
                                   psi_table(ts, c.psi_profile, c.rng(2)), pick.dyadic(-2, 2))
        return Instance(rule, pair, {"alpha": _alpha(alpha, pick)}, seed)

    if rule in ("Prop2.1", "Prop3.1ii"):
        c = cfg(RatioProfile.CONSTANT, every)
        ts = gen_finite_scale(c)
        pair = FunctionPair(random_table(ts, c.rng(4)), psi_table(ts, c.psi_profile, c.rng(2)), ts)
        params = {} if rule == "Prop2.1" else {"alpha": _alpha(alpha, pick)}
        return Instance(rule, pair, params, seed)

    raise ConfigError(f"unknown rule {rule!r}; expected one of {', '.join(RULES)}")


def _alpha(alpha, rng: SplitMix64) -> Fraction:
    return Fraction(alpha) if alpha is not None else rng.choice(ALPHAS)


def _mr22_shift(pair: FunctionPair, case: int, profile: RatioProfile, rng: SplitMix64):
    """Constant ``c`` so that ``phi + c`` meets the case's endpoint condition.

    Adding ``c`` to phi subtracts ``c`` from Y.
    """
    pts = pair.scale.points()
    y_first, y_last = y_nabla(pair, pts[1]), y_nabla(pair, pts[-1])
    up = profile is RatioProfile.INCREASING
    margin = rng.dyadic(0, 1)
    if case == 1:
        return (y_first if up else y_last) - margin
    if case == 2:
        return (y_last if up else y_first) + margin
    lam = rng.dyadic(0, 1)
    return y_first + lam * (y_last - y_first)


__all__ = [
    "SplitMix64", "RatioProfile", "PsiProfile", "GenConfig", "gen_finite_scale", "psi_table",
    "ratio_table", "tent_table", "random_table", "gen_pair_with_ratio",
    "gen_unimodal_ratio_pair", "Instance", "rule_instance", "instance_from_dict",
    "function_to_json", "function_from_json", "ALPHAS", "RULES",
]
