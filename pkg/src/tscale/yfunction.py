"""Nabla and diamond-alpha Y-functions and the identities built on them.

Every identity is available two ways: the closed formula, and a direct
reference obtained by differentiating the tabulated left-hand side with the
difference quotients of :mod:`tscale.calculus`.  The verification suites
compare the two.
"""
from __future__ import annotations

from dataclasses import dataclass
from numbers import Real

from . import expr as ex
from .calculus import (
    DELTA,
    NABLA,
    DerivativeFunction,
    DerivKind,
    Derived,
    ScaleFunction,
    as_function,
    deriv,
    deriv2,
    quotient,
    zero_check,
)
from .errors import ZeroDenominator
from .timescale import PointRef, TimeScale


@dataclass(frozen=True)
class FunctionPair:
    phi: ScaleFunction
    psi: ScaleFunction
    scale: TimeScale

    def __post_init__(self):
        object.__setattr__(self, "phi", as_function(self.phi))
        object.__setattr__(self, "psi", as_function(self.psi))

    def negated(self, phi: bool = False, psi: bool = False) -> "FunctionPair":
        return FunctionPair(-self.phi if phi else self.phi,
                            -self.psi if psi else self.psi, self.scale)

    def point(self, p) -> PointRef:
        return self.scale.point(p)


def _kind(alpha) -> DerivKind:
    return NABLA if alpha is None else DerivKind.diamond(alpha)


def _mix(a, b, first, second):
    """``a*first() + b*second()`` without evaluating a zero-weighted term."""
    if not b:
        return first() if a == 1 else a * first()
    if not a:
        return second() if b == 1 else b * second()
    return a * first() + b * second()


# -- the Y-function itself -----------------------------------------------------

def derivative_ratio(pair: FunctionPair, k: DerivKind = NABLA) -> ScaleFunction:
    """``q -> phi^k(q) / psi^k(q)``."""
    ts = pair.scale
    dphi = DerivativeFunction(pair.phi, ts, k)
    dpsi = DerivativeFunction(pair.psi, ts, k)
    return quotient(dphi, dpsi, f"{pair.phi.label}^{k}/{pair.psi.label}^{k}")


def y_value(pair: FunctionPair, p, k: DerivKind = NABLA) -> Real:
    """``(phi^k/psi^k)(p) * psi(p) - phi(p)``."""
    ts = pair.scale
    p = ts.point(p)
    dpsi = deriv(pair.psi, ts, p, k)
    zero_check(dpsi, f"{pair.psi.label}^{k}", p)
    dphi = deriv(pair.phi, ts, p, k)
    return dphi / dpsi * pair.psi.value(p) - pair.phi.value(p)


def y_nabla(pair: FunctionPair, p) -> Real:
    return y_value(pair, p, NABLA)


def y_diamond(pair: FunctionPair, alpha, p) -> Real:
    return y_value(pair, p, DerivKind.diamond(alpha))


def y_function(pair: FunctionPair, k: DerivKind = NABLA) -> ScaleFunction:
    """The Y-function as a scale function (for taking its derivatives)."""
    ratio = derivative_ratio(pair, k)

    def sym(ts, p, side):
        r = ratio.symbolic(ts, p, side)
        s = pair.psi.symbolic(ts, p, side)
        f = pair.phi.symbolic(ts, p, side)
        if r is None or s is None or f is None:
            return None
        return ex.sub(ex.mul(r, s), f)

    return Derived(lambda p: y_value(pair, p, k), sym, f"Y[{pair.phi.label},{pair.psi.label}]")


# -- nabla identities ------------------------------------------------------------

def y_nabla_deriv_formula(pair: FunctionPair, p) -> Real:
    """``(phi^nabla/psi^nabla)^nabla(p) * psi(rho(p))``."""
    ts = pair.scale
    p = ts.point(p)
    return deriv(derivative_ratio(pair, NABLA), ts, p, NABLA) * pair.psi.value(ts.rho(p))


def y_nabla_deriv_direct(pair: FunctionPair, p) -> Real:
    """Nabla derivative of the tabulated nabla Y-function."""
    return deriv(y_function(pair, NABLA), pair.scale, p, NABLA)


def quotient_nabla_via_y(pair: FunctionPair, p) -> Real:
    """``psi^nabla / (psi * psi^rho) * Y`` at ``p``."""
    ts = pair.scale
    p = ts.point(p)
    psi_p, psi_r = pair.psi.value(p), pair.psi.value(ts.rho(p))
    zero_check(psi_p * psi_r, "psi * psi^rho", p)
    return deriv(pair.psi, ts, p, NABLA) / (psi_p * psi_r) * y_nabla(pair, p)


def quotient_nabla_rule(pair: FunctionPair, p) -> Real:
    """Nabla quotient rule ``(phi^nabla psi - phi psi^nabla) / (psi^rho psi)``."""
    ts = pair.scale
    p = ts.point(p)
    psi_p, psi_r = pair.psi.value(p), pair.psi.value(ts.rho(p))
    zero_check(psi_p * psi_r, "psi * psi^rho", p)
    num = deriv(pair.phi, ts, p, NABLA) * psi_p - pair.phi.value(p) * deriv(pair.psi, ts, p, NABLA)
    return num / (psi_r * psi_p)


def quotient_function(pair: FunctionPair) -> ScaleFunction:
    return quotient(pair.phi, pair.psi)


def quotient_nabla_direct(pair: FunctionPair, p) -> Real:
    """Nabla derivative of the tabulated ratio ``phi/psi``."""
    return deriv(quotient_function(pair), pair.scale, p, NABLA)


# -- diamond identities ----------------------------------------------------------

@dataclass(frozen=True)
class DiamondQuotientTerms:
    """Pieces of the diamond quotient formula at one point.

    ``numerator`` is the left side minus the right side of the inequality
    ``phi^d psi^s psi^r >= a phi^s psi^r psi^D + (1-a) phi^r psi^s psi^N``
    and ``denominator`` is ``psi psi^s psi^r``; their ratio is the formula.
    """

    numerator: Real
    denominator: Real

    @property
    def value(self) -> Real:
        return self.numerator / self.denominator


def diamond_quotient_terms(pair: FunctionPair, alpha, p) -> DiamondQuotientTerms:
    ts = pair.scale
    p = ts.point(p)
    k = DerivKind.diamond(alpha)
    wd, wn = k.weights
    s, r = ts.sigma(p), ts.rho(p)
    phi, psi = pair.phi, pair.psi
    psi_p, psi_s, psi_r = psi.value(p), psi.value(s), psi.value(r)
    den = psi_p * psi_s * psi_r
    zero_check(den, "psi * psi^sigma * psi^rho", p)
    num = deriv(phi, ts, p, k) * psi_s * psi_r
    if wd:
        num -= wd * phi.value(s) * psi_r * deriv(psi, ts, p, DELTA)
    if wn:
        num -= wn * phi.value(r) * psi_s * deriv(psi, ts, p, NABLA)
    return DiamondQuotientTerms(num, den)


def diamond_quotient_deriv(pair: FunctionPair, alpha, p) -> Real:
    """Closed-form diamond-alpha derivative of ``phi/psi`` at ``p``."""
    return diamond_quotient_terms(pair, alpha, p).value


def diamond_quotient_direct(pair: FunctionPair, alpha, p) -> Real:
    """``alpha*delta + (1-alpha)*nabla`` of the tabulated ratio ``phi/psi``."""
    return deriv(quotient_function(pair), pair.scale, p, DerivKind.diamond(alpha))


@dataclass(frozen=True)
class YDiamondDerivative:
    """Diamond derivative of the diamond Y-function, several ways.

    ``printed`` is the published two-block expansion taken literally;
    ``alt_reading`` swaps its ``psi^d psi^N`` term for ``phi^d psi^N``;
    ``derived`` is the expansion obtained from the delta/nabla product and
    quotient rules; ``reference`` differentiates the tabulated Y-function.
    """

    printed: Real
    alt_reading: Real
    derived: Real
    reference: Real

    @property
    def residual(self) -> Real:
        return self.printed - self.reference

    @property
    def alt_residual(self) -> Real:
        return self.alt_reading - self.reference

    @property
    def derived_residual(self) -> Real:
        return self.derived - self.reference


def y_diamond_deriv_formula(pair: FunctionPair, alpha, p) -> YDiamondDerivative:
    ts = pair.scale
    p = ts.point(p)
    k = DerivKind.diamond(alpha)
    a, b = k.weights
    phi, psi = pair.phi, pair.psi
    phi_d, psi_d = deriv(phi, ts, p, k), deriv(psi, ts, p, k)
    psi_v = psi.value(p)
    printed = alt = derived = 0

    if a:
        s = ts.sigma(p)
        psi_ds = deriv(psi, ts, s, k)
        zero_check(psi_d * psi_ds, "psi^diamond * psi^(sigma diamond)", p)
        psi_sig = psi.value(s)
        phi_D, psi_D = deriv(phi, ts, p, DELTA), deriv(psi, ts, p, DELTA)
        phi2 = _mix(a, b, lambda: deriv2(phi, ts, p, DELTA, DELTA),
                    lambda: deriv2(phi, ts, p, NABLA, DELTA))
        psi2 = _mix(a, b, lambda: deriv2(psi, ts, p, DELTA, DELTA),
                    lambda: deriv2(psi, ts, p, NABLA, DELTA))
        scale = a / (psi_d * psi_ds)
        block = (phi2 * psi_sig + phi_d * psi_D) * psi_d - psi2 * phi_d * psi_v - phi_D * psi_d * psi_ds
        printed += scale * block
        alt += scale * block
        derived += scale * (phi2 * psi_d * psi_sig - phi_d * psi2 * psi_sig
                            + phi_d * psi_D * psi_ds - phi_D * psi_d * psi_ds)

    if b:
        r = ts.rho(p)
        psi_dr = deriv(psi, ts, r, k)
        zero_check(psi_d * psi_dr, "psi^diamond * psi^(rho diamond)", p)
        psi_rho = psi.value(r)
        phi_N, psi_N = deriv(phi, ts, p, NABLA), deriv(psi, ts, p, NABLA)
        phi2 = _mix(a, b, lambda: deriv2(phi, ts, p, DELTA, NABLA),
                    lambda: deriv2(phi, ts, p, NABLA, NABLA))
        psi2 = _mix(a, b, lambda: deriv2(psi, ts, p, DELTA, NABLA),
                    lambda: deriv2(psi, ts, p, NABLA, NABLA))
        scale = b / (psi_d * psi_dr)
        tail = - psi2 * phi_d * psi_v - phi_N * psi_d * psi_dr
        printed += scale * ((phi2 * psi_rho + psi_d * psi_N) * psi_d + tail)
        alt += scale * ((phi2 * psi_rho + phi_d * psi_N) * psi_d + tail)
        derived += scale * (phi2 * psi_d * psi_rho - phi_d * psi2 * psi_rho
                            + phi_d * psi_N * psi_dr - phi_N * psi_d * psi_dr)

    reference = deriv(y_function(pair, k), ts, p, k)
    return YDiamondDerivative(printed, alt, derived, reference)


@dataclass(frozen=True)
class RatioDiamondDerivative:
    """Diamond derivative of ``phi^d / psi^d``: printed expansion, corrected, reference."""

    printed: Real
    corrected: Real
    reference: Real
    triple_product: Real

    @property
    def residual(self) -> Real:
        return self.printed - self.reference

    @property
    def corrected_residual(self) -> Real:
        return self.corrected - self.reference


def ratio_diamond_deriv_formula(pair: FunctionPair, alpha, p) -> RatioDiamondDerivative:
    """Expansion of ``(phi^d/psi^d)^d`` used by the diamond monotonicity rule.

    The printed version has ``(psi^{Delta nabla} + (1-a) psi^{nabla nabla})``
    in its last term; ``corrected`` restores the weight ``a`` on the first
    summand, which is what the diamond quotient rule gives.
    """
    ts = pair.scale
    p = ts.point(p)
    k = DerivKind.diamond(alpha)
    a, b = k.weights
    phi, psi = pair.phi, pair.psi
    s, r = ts.sigma(p), ts.rho(p)
    g, g_s, g_r = deriv(psi, ts, p, k), deriv(psi, ts, s, k), deriv(psi, ts, r, k)
    triple = g * g_s * g_r
    zero_check(triple, "psi^d psi^(sigma d) psi^(rho d)", p)
    f_dd = deriv2(phi, ts, p, k, k)
    printed = corrected = f_dd * g_s * g_r
    if a:
        g_D = _mix(a, b, lambda: deriv2(psi, ts, p, DELTA, DELTA),
                   lambda: deriv2(psi, ts, p, NABLA, DELTA))
        term = a * deriv(phi, ts, s, k) * g_r * g_D
        printed -= term
        corrected -= term
    if b:
        f_r = deriv(phi, ts, r, k)
        if a:
            dn, nn = deriv2(psi, ts, p, DELTA, NABLA), deriv2(psi, ts, p, NABLA, NABLA)
            printed -= b * f_r * g_s * (dn + b * nn)
            corrected -= b * f_r * g_s * (a * dn + b * nn)
        else:
            nn = deriv2(psi, ts, p, NABLA, NABLA)
            printed -= f_r * g_s * nn
            corrected -= f_r * g_s * nn
    ratio = derivative_ratio(pair, k)
    reference = deriv(ratio, ts, p, k)
    return RatioDiamondDerivative(printed / triple, corrected / triple, reference, triple)


# -- sign symmetry -----------------------------------------------------------------

@dataclass(frozen=True)
class SymmetryRecord:
    y: Real
    y_neg_psi: Real
    y_neg_phi: Real
    y_neg_both: Real

    @property
    def derivable_holds(self) -> bool:
        """Even in psi, odd in phi."""
        return (self.y_neg_psi == self.y and self.y_neg_phi == -self.y
                and self.y_neg_both == -self.y)

    @property
    def printed_middle_holds(self) -> bool:
        """The published chain also equates Y with Y for (-phi, psi)."""
        return self.y_neg_phi == self.y

    def as_tuple(self):
        return (self.y, self.y_neg_psi, self.y_neg_phi, self.y_neg_both)


def y_symmetry_check(pair: FunctionPair, p, alpha=None) -> SymmetryRecord:
    """Y for (phi, psi), (phi, -psi), (-phi, psi), (-phi, -psi) at ``p``.

    ``alpha=None`` uses the nabla Y-function, otherwise the diamond one.
    """
    k = _kind(alpha)
    return SymmetryRecord(
        y_value(pair, p, k),
        y_value(pair.negated(psi=True), p, k),
        y_value(pair.negated(phi=True), p, k),
        y_value(pair.negated(phi=True, psi=True), p, k),
    )


__all__ = [
    "FunctionPair", "derivative_ratio", "y_value", "y_nabla", "y_diamond", "y_function",
    "y_nabla_deriv_formula", "y_nabla_deriv_direct", "quotient_nabla_via_y",
    "quotient_nabla_rule", "quotient_nabla_direct", "quotient_function",
    "DiamondQuotientTerms", "diamond_quotient_terms", "diamond_quotient_deriv",
    "diamond_quotient_direct", "YDiamondDerivative", "y_diamond_deriv_formula",
    "RatioDiamondDerivative", "ratio_diamond_deriv_formula", "SymmetryRecord",
    "y_symmetry_check", "ZeroDenominator",
]
