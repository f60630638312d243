"""Monotonicity classification and checkers for the monotonicity rules.

Each ``check_*`` function restricts the pair to ``[a, b]``, evaluates the
rule's hypotheses on the grid, and only when none of them fails evaluates
the conclusion against a direct scan of the tabulated target function.
Everything comes back as a :class:`RuleReport`; hypothesis failures
(including vanishing denominators) never escape as exceptions.

Conclusions are checked as weak monotonicity.  On grids that sample a dense
component a passing hypothesis is reported as ``BEST_EFFORT`` rather than
``PASS`` and the verdicts carry ``Confidence.SAMPLED``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Callable, Optional, Sequence

from .calculus import NABLA, DerivativeFunction, DerivKind, Derived, ScaleFunction
from .errors import InvalidRange, OutsideKappaDomain, ZeroDenominator
from .timescale import PointRef, TimeScale
from .yfunction import (
    FunctionPair,
    derivative_ratio,
    diamond_quotient_direct,
    diamond_quotient_terms,
    quotient_function,
    quotient_nabla_direct,
    quotient_nabla_rule,
    quotient_nabla_via_y,
    ratio_diamond_deriv_formula,
    y_diamond_deriv_formula,
    y_function,
    y_nabla_deriv_direct,
    y_nabla_deriv_formula,
    y_symmetry_check,
)

DEFAULT_DENSE_SAMPLES = 16

INCREASING, DECREASING, CONSTANT = "increasing", "decreasing", "constant"


class Monotonicity(enum.Enum):
    STRICTLY_INCREASING = "STRICTLY_INCREASING"
    WEAKLY_INCREASING = "WEAKLY_INCREASING"
    CONSTANT = "CONSTANT"
    WEAKLY_DECREASING = "WEAKLY_DECREASING"
    STRICTLY_DECREASING = "STRICTLY_DECREASING"
    NON_MONOTONE = "NON_MONOTONE"

    @property
    def is_increasing(self) -> bool:
        """Weakly increasing (constant included)."""
        return self in (Monotonicity.STRICTLY_INCREASING, Monotonicity.WEAKLY_INCREASING,
                        Monotonicity.CONSTANT)

    @property
    def is_decreasing(self) -> bool:
        return self in (Monotonicity.STRICTLY_DECREASING, Monotonicity.WEAKLY_DECREASING,
                        Monotonicity.CONSTANT)

    def negate(self) -> "Monotonicity":
        return _NEGATED[self]

    def satisfies(self, direction: str) -> bool:
        if direction == INCREASING:
            return self.is_increasing
        if direction == DECREASING:
            return self.is_decreasing
        return self is Monotonicity.CONSTANT

    @property
    def direction(self) -> Optional[str]:
        if self is Monotonicity.CONSTANT:
            return CONSTANT
        if self.is_increasing:
            return INCREASING
        if self.is_decreasing:
            return DECREASING
        return None


_NEGATED = {
    Monotonicity.STRICTLY_INCREASING: Monotonicity.STRICTLY_DECREASING,
    Monotonicity.WEAKLY_INCREASING: Monotonicity.WEAKLY_DECREASING,
    Monotonicity.CONSTANT: Monotonicity.CONSTANT,
    Monotonicity.WEAKLY_DECREASING: Monotonicity.WEAKLY_INCREASING,
    Monotonicity.STRICTLY_DECREASING: Monotonicity.STRICTLY_INCREASING,
    Monotonicity.NON_MONOTONE: Monotonicity.NON_MONOTONE,
}


def flip(direction: str) -> str:
    return {INCREASING: DECREASING, DECREASING: INCREASING}.get(direction, direction)


class Confidence(enum.Enum):
    EXACT = "EXACT"
    SAMPLED = "SAMPLED"


class Status(enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    BEST_EFFORT = "BEST_EFFORT"


@dataclass(frozen=True)
class Tolerances:
    """Equality slack for value comparisons, relative to ``1 + max|f|``.

    Exact (rational) data is always compared with zero slack.
    """

    discrete: float = 1e-12
    sampled: float = 1e-9
    identity: float = 1e-9

    def for_values(self, values: Sequence[Real], sampled: bool) -> float:
        if not sampled and all(isinstance(v, (int, Fraction)) for v in values):
            return 0.0
        scale = 1.0 + max((abs(float(v)) for v in values), default=0.0)
        return (self.sampled if sampled else self.discrete) * scale

    def to_dict(self):
        return {"discrete": self.discrete, "sampled": self.sampled, "identity": self.identity}


DEFAULT_TOLERANCES = Tolerances()


def _f(v) -> float:
    return float(v)


@dataclass(frozen=True)
class Step:
    """Two consecutive grid points and the function values there."""

    t0: float
    t1: float
    v0: Real
    v1: Real

    @property
    def diff(self) -> Real:
        return self.v1 - self.v0

    def to_list(self):
        return [[self.t0, _f(self.v0)], [self.t1, _f(self.v1)]]


@dataclass(frozen=True)
class MonotoneVerdict:
    kind: Monotonicity
    increase: Optional[Step] = None
    decrease: Optional[Step] = None
    confidence: Confidence = Confidence.EXACT
    tolerance: float = 0.0
    points: int = 0

    @property
    def witness(self) -> Optional[tuple[Step, Step]]:
        """``(decrease, increase)`` for non-monotone verdicts."""
        if self.kind is Monotonicity.NON_MONOTONE:
            return (self.decrease, self.increase)
        return None

    def violation(self, direction: str) -> Optional[Step]:
        """A step contradicting ``direction``, if any."""
        if direction == INCREASING:
            return self.decrease
        if direction == DECREASING:
            return self.increase
        return self.increase or self.decrease

    def to_dict(self):
        return {
            "class": self.kind.value,
            "confidence": self.confidence.value,
            "points": self.points,
            "tolerance": self.tolerance,
            "increase": self.increase.to_list() if self.increase else None,
            "decrease": self.decrease.to_list() if self.decrease else None,
        }


def classify_values(samples: Sequence[tuple[float, Real]], tolerance: float = 0.0,
                    confidence: Confidence = Confidence.EXACT) -> MonotoneVerdict:
    """Classify ``(t, value)`` samples (in increasing ``t``) by consecutive differences.

    The witness steps are the steepest rise and the steepest fall (leftmost
    on ties).
    """
    inc = dec = None
    flat = False
    for (t0, v0), (t1, v1) in zip(samples, samples[1:]):
        d = v1 - v0
        if d > tolerance:
            if inc is None or d > inc.diff:
                inc = Step(_f(t0), _f(t1), v0, v1)
        elif d < -tolerance:
            if dec is None or d < dec.diff:
                dec = Step(_f(t0), _f(t1), v0, v1)
        else:
            flat = True
    if inc and dec:
        kind = Monotonicity.NON_MONOTONE
    elif inc:
        kind = Monotonicity.WEAKLY_INCREASING if flat else Monotonicity.STRICTLY_INCREASING
    elif dec:
        kind = Monotonicity.WEAKLY_DECREASING if flat else Monotonicity.STRICTLY_DECREASING
    else:
        kind = Monotonicity.CONSTANT
    return MonotoneVerdict(kind, inc, dec, confidence, tolerance, len(samples))


def _samples(f: ScaleFunction, pts: Sequence[PointRef],
             skip=(OutsideKappaDomain,)) -> list[tuple[PointRef, Real]]:
    out = []
    for p in pts:
        try:
            out.append((p, f.value(p)))
        except skip:
            continue
    return out


def _as_coords(samples):
    return [(p.value, v) for p, v in samples]


def classify_monotone(f: ScaleFunction, ts: TimeScale, a=None, b=None,
                      dense_samples: int = DEFAULT_DENSE_SAMPLES,
                      tolerances: Tolerances = DEFAULT_TOLERANCES) -> MonotoneVerdict:
    """Monotonicity of ``f`` on the grid of ``[a, b]``.

    Points outside the domain of a derivative (an isolated extreme point)
    are skipped.  Other evaluation errors propagate.
    """
    a = ts.min if a is None else ts.point(a)
    b = ts.max if b is None else ts.point(b)
    sampled = not ts.restrict(a, b).is_discrete
    samples = _samples(f, ts.grid(a, b, dense_samples))
    tol = tolerances.for_values([v for _, v in samples], sampled)
    conf = Confidence.SAMPLED if sampled else Confidence.EXACT
    return classify_values(_as_coords(samples), tol, conf)


# -- report types ------------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisCheck:
    name: str
    status: Status
    witness: tuple = ()
    detail: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "status": self.status.value,
            "witness": [[_f(t), _f(v)] for t, v in self.witness] or None,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class MonotoneConclusion:
    target: str
    expected: str
    verdict: MonotoneVerdict
    statement: str = ""

    @property
    def holds(self) -> bool:
        return self.verdict.kind.satisfies(self.expected)

    @property
    def counterexample(self) -> Optional[dict]:
        if self.holds:
            return None
        step = self.verdict.violation(self.expected)
        return {"target": self.target, "expected": self.expected,
                "step": step.to_list() if step else None}

    def to_dict(self):
        return {
            "type": "monotone",
            "target": self.target,
            "statement": self.statement,
            "expected": self.expected,
            "holds": self.holds,
            "verdict": self.verdict.to_dict(),
        }


@dataclass(frozen=True)
class SplitConclusion:
    """``target`` follows ``first`` on ``[a, split]`` and ``second`` on ``[split, b]``."""

    target: str
    first: str
    second: str
    split: float
    left: MonotoneVerdict
    right: MonotoneVerdict
    statement: str = ""

    @property
    def holds(self) -> bool:
        return self.left.kind.satisfies(self.first) and self.right.kind.satisfies(self.second)

    @property
    def counterexample(self) -> Optional[dict]:
        if self.holds:
            return None
        if not self.left.kind.satisfies(self.first):
            step, expected = self.left.violation(self.first), self.first
        else:
            step, expected = self.right.violation(self.second), self.second
        return {"target": self.target, "expected": expected, "split": self.split,
                "step": step.to_list() if step else None}

    def to_dict(self):
        return {
            "type": "split",
            "target": self.target,
            "statement": self.statement,
            "first": self.first,
            "second": self.second,
            "split": self.split,
            "holds": self.holds,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }


@dataclass(frozen=True)
class IdentityConclusion:
    """Agreement of a closed formula with a direct computation."""

    target: str
    points: int
    max_residual: float
    worst_point: Optional[float]
    tolerance: float
    failures: int
    extra: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.failures == 0

    @property
    def counterexample(self) -> Optional[dict]:
        if self.holds:
            return None
        return {"target": self.target, "point": self.worst_point,
                "residual": self.max_residual}

    def to_dict(self):
        return {
            "type": "identity",
            "target": self.target,
            "holds": self.holds,
            "points": self.points,
            "max_residual": self.max_residual,
            "worst_point": self.worst_point,
            "relative_tolerance": self.tolerance,
            "failures": self.failures,
            "extra": self.extra,
        }


@dataclass
class RuleReport:
    rule_id: str
    scale: str
    interval: tuple[float, float]
    alpha: Optional[Fraction]
    hypothesis_checks: list[HypothesisCheck]
    conclusion: object = None
    advisory_checks: list[HypothesisCheck] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    tolerances: Tolerances = DEFAULT_TOLERANCES
    confidence: Confidence = Confidence.EXACT
    residuals: Optional[dict] = None

    @property
    def hypotheses_hold(self) -> bool:
        return all(c.status is not Status.FAIL for c in self.hypothesis_checks)

    @property
    def counterexample(self) -> Optional[dict]:
        return None if self.conclusion is None else self.conclusion.counterexample

    @property
    def outcome(self) -> str:
        if not self.hypotheses_hold:
            return "HYPOTHESIS_FAILED"
        if self.conclusion is not None and not self.conclusion.holds:
            return "CONCLUSION_FAILED"
        return "VERIFIED"

    def failed_checks(self) -> list[HypothesisCheck]:
        return [c for c in self.hypothesis_checks if c.status is Status.FAIL]

    def to_dict(self):
        return {
            "rule_id": self.rule_id,
            "scale": self.scale,
            "interval": [self.interval[0], self.interval[1]],
            "alpha": None if self.alpha is None else str(self.alpha),
            "outcome": self.outcome,
            "confidence": self.confidence.value,
            "hypothesis_checks": [c.to_dict() for c in self.hypothesis_checks],
            "conclusion": None if self.conclusion is None else self.conclusion.to_dict(),
            "counterexample": self.counterexample,
            "advisory_checks": [c.to_dict() for c in self.advisory_checks],
            "residuals": self.residuals,
            "tolerances": self.tolerances.to_dict(),
            "notes": list(self.notes),
        }


# -- run plumbing ------------------------------------------------------------------

class _Stop(Exception):
    pass


class _Run:
    """Shared state of one rule check on the restricted pair."""

    def __init__(self, rule_id, pair: FunctionPair, a, b, dense_samples, alpha, tolerances):
        ts = pair.scale
        a = ts.min if a is None else ts.point(a)
        b = ts.max if b is None else ts.point(b)
        if not a < b:
            raise InvalidRange(f"rule checks need a < b, got [{a.value}, {b.value}]")
        self.scale = ts.restrict(a, b)
        self.pair = FunctionPair(pair.phi, pair.psi, self.scale)
        self.a, self.b = self.scale.min, self.scale.max
        self.pts = self.scale.grid(dense_samples=dense_samples)
        self.sampled = not self.scale.is_discrete
        self.tol = tolerances
        self.report = RuleReport(
            rule_id, str(self.scale), (self.a.value, self.b.value),
            None if alpha is None else DerivKind.diamond(alpha).alpha, [],
            tolerances=tolerances,
            confidence=Confidence.SAMPLED if self.sampled else Confidence.EXACT)

    @property
    def passed(self) -> Status:
        return Status.BEST_EFFORT if self.sampled else Status.PASS

    def require(self, check: HypothesisCheck) -> HypothesisCheck:
        self.report.hypothesis_checks.append(check)
        if check.status is Status.FAIL:
            raise _Stop
        return check

    def advise(self, check: HypothesisCheck):
        self.report.advisory_checks.append(check)

    def note(self, text: str):
        self.report.notes.append(text)

    def tolerance(self, samples) -> float:
        return self.tol.for_values([v for _, v in samples], self.sampled)

    def values(self, f: ScaleFunction, name: str, pts=None) -> list[tuple[PointRef, Real]]:
        """Tabulate ``f``; a vanishing denominator becomes a failed hypothesis."""
        try:
            return _samples(f, self.pts if pts is None else pts)
        except ZeroDenominator as e:
            self.require(HypothesisCheck(name, Status.FAIL,
                                         ((e.point, 0),) if e.point is not None else (),
                                         str(e)))

    def verdict(self, samples) -> MonotoneVerdict:
        conf = Confidence.SAMPLED if self.sampled else Confidence.EXACT
        return classify_values(_as_coords(samples), self.tolerance(samples), conf)

    # -- common checks --

    def sign_check(self, name: str, samples, strict: bool, positive_only=False) -> int:
        """Constant sign of the sampled values; returns +1 or -1.

        ``strict`` also requires the values to be nonzero.  With
        ``positive_only`` the sign must be +1.
        """
        tol = self.tolerance(samples)
        pos = [(p.value, v) for p, v in samples if v > tol]
        neg = [(p.value, v) for p, v in samples if v < -tol]
        zero = [(p.value, v) for p, v in samples if -tol <= v <= tol]
        if strict and zero:
            self.require(HypothesisCheck(name, Status.FAIL, (zero[0],), "value is zero"))
        if pos and neg:
            self.require(HypothesisCheck(name, Status.FAIL, (pos[0], neg[0]), "sign changes"))
        if positive_only and neg:
            self.require(HypothesisCheck(name, Status.FAIL, (neg[0],), "value is negative"))
        sign = -1 if neg else 1
        self.require(HypothesisCheck(name, self.passed, (),
                                     f"sign {'+' if sign > 0 else '-'} on {len(samples)} points"))
        return sign

    def monotone_check(self, name: str, samples, want: Optional[str] = None) -> MonotoneVerdict:
        v = self.verdict(samples)
        if v.kind is Monotonicity.NON_MONOTONE:
            ok = False
        else:
            ok = want is None or v.kind.satisfies(want)
        if not ok:
            bad = v.violation(want) if want else None
            steps = [s for s in ((bad,) if bad else (v.decrease, v.increase)) if s]
            wit = tuple(pt for s in steps for pt in ((s.t0, s.v0), (s.t1, s.v1)))
            self.require(HypothesisCheck(name, Status.FAIL, wit, f"verdict {v.kind.value}"))
        self.require(HypothesisCheck(name, self.passed, (), f"verdict {v.kind.value}"))
        return v

    def condition(self, name: str, ok: bool, witness=(), detail=""):
        self.require(HypothesisCheck(name, self.passed if ok else Status.FAIL,
                                     witness if not ok else (), detail))

    def run(self, body: Callable[[], object]) -> RuleReport:
        try:
            self.report.conclusion = body()
        except _Stop:
            self.report.conclusion = None
        except ZeroDenominator as e:
            self.report.hypothesis_checks.append(HypothesisCheck(
                "denominators_nonzero", Status.FAIL,
                ((e.point, 0),) if e.point is not None else (), str(e)))
            self.report.conclusion = None
        return self.report


def _ratio_direction(v: MonotoneVerdict) -> str:
    return v.kind.direction or INCREASING


def _sign(v, tol) -> int:
    return 1 if v > tol else -1 if v < -tol else 0


def _locate_split(y_samples, first_sign: int, tol) -> Optional[PointRef]:
    """Last grid point of the first regime of a sign pattern.

    ``first_sign`` is the sign ``Y`` should have before the split.  The split
    is the leftmost point of the zero plateau preceding the first value of
    the opposite sign, or the last point before that value when there is no
    plateau.  ``None`` means the opposite sign never occurs.
    """
    signs = [_sign(v, tol) for _, v in y_samples]
    for j, s in enumerate(signs):
        if s == -first_sign:
            break
    else:
        return None
    k = j
    while k > 0 and signs[k - 1] == 0:
        k -= 1
    if k < j:
        return y_samples[k][0]
    return y_samples[j - 1][0] if j > 0 else None


def _split_conclusion(run: _Run, target: str, samples, split: Optional[PointRef],
                      first: str, second: str, statement: str) -> SplitConclusion:
    if split is None:
        split_t = run.b.value if samples else run.a.value
    else:
        split_t = split.value
    left = [(p, v) for p, v in samples if p.value <= split_t]
    right = [(p, v) for p, v in samples if p.value >= split_t]
    return SplitConclusion(target, first, second, split_t,
                           run.verdict(left), run.verdict(right), statement)


def _direction_of(sign: int) -> str:
    return INCREASING if sign > 0 else DECREASING


def _nabla_samples(run: _Run, f: ScaleFunction, name: str):
    return run.values(DerivativeFunction(f, run.scale, NABLA), name)


# -- nabla rules -----------------------------------------------------------------

def anchored_quotient(pair: FunctionPair, anchor: PointRef) -> ScaleFunction:
    """``s -> (phi(s) - phi(b0)) / (psi(s) - psi(b0))``."""
    phi0, psi0 = pair.phi.value(anchor), pair.psi.value(anchor)

    def fn(p):
        den = pair.psi.value(p) - psi0
        if den == 0:
            raise ZeroDenominator(f"psi(s) - psi(anchor) vanishes at t={p.value!r}", p.value)
        return (pair.phi.value(p) - phi0) / den

    return Derived(fn, None, f"anchored quotient at {anchor.value!r}")


def check_mr21(pair: FunctionPair, a=None, b=None, anchor: str = "alpha",
               dense_samples: int = DEFAULT_DENSE_SAMPLES,
               tolerances: Tolerances = DEFAULT_TOLERANCES) -> RuleReport:
    """Anchored difference quotient follows the nabla derivative ratio.

    ``anchor`` is ``"alpha"`` (left end) or ``"beta"`` (right end).
    """
    if anchor not in ("alpha", "beta"):
        raise InvalidRange(f"anchor must be 'alpha' or 'beta', got {anchor!r}")
    run = _Run("MR2.1", pair, a, b, dense_samples, None, tolerances)
    p = run.pair

    def body():
        psi_vals = run.values(p.psi, "psi_defined")
        tol = run.tolerance(psi_vals)
        signs = {_sign(v, tol) for _, v in psi_vals}
        printed_ok = not ({1, -1} <= signs)
        run.advise(HypothesisCheck(
            "psi_sign_constant", run.passed if printed_ok else Status.FAIL, (),
            "literal hypothesis on psi; not used for gating"))
        run.note("gating uses sign constancy of psi^nabla and nonvanishing anchor differences")

        dpsi = _nabla_samples(run, p.psi, "psi_nabla_defined")
        run.sign_check("psi_nabla_nonzero_constant_sign", dpsi, strict=True)
        ratio = run.values(derivative_ratio(p, NABLA), "ratio_defined")
        rv = run.monotone_check("ratio_monotone", ratio)

        b0 = run.a if anchor == "alpha" else run.b
        diffs = [(q, p.psi.value(q) - p.psi.value(b0)) for q in run.pts if q != b0]
        zero = [(q.value, d) for q, d in diffs if d == 0]
        run.condition("anchor_denominator_nonzero", not zero, tuple(zero[:1]),
                      "psi(s) != psi(anchor) for s != anchor")
        target = anchored_quotient(p, b0)
        qv = run.values(target, "anchor_denominator_nonzero",
                        [q for q in run.pts if q != b0])
        return MonotoneConclusion(f"(phi(s)-phi({anchor}))/(psi(s)-psi({anchor}))",
                                  _ratio_direction(rv), run.verdict(qv))

    rep = run.run(body)
    rep.rule_id = f"MR2.1[{anchor}]"
    return rep


def check_prop22(pair: FunctionPair, a=None, b=None,
                 dense_samples: int = DEFAULT_DENSE_SAMPLES,
                 tolerances: Tolerances = DEFAULT_TOLERANCES) -> RuleReport:
    """The nabla Y-function moves with the ratio when ``psi^rho >= 0``, against it when ``<= 0``."""
    run = _Run("Prop2.2", pair, a, b, dense_samples, None, tolerances)
    p = run.pair

    def body():
        dom = [q for q, _ in _nabla_samples(run, p.psi, "psi_nabla_defined")]
        psi_rho = [(q, p.psi.value(run.scale.rho(q))) for q in dom]
        sr = run.sign_check("psi_rho_constant_sign", psi_rho, strict=False)
        ratio = run.values(derivative_ratio(p, NABLA), "ratio_defined")
        rv = run.monotone_check("ratio_monotone", ratio)
        yv = run.values(y_function(p, NABLA), "y_defined")
        expected = _ratio_direction(rv)
        if sr < 0:
            expected = flip(expected)
        return MonotoneConclusion("Y", expected, run.verdict(yv),
                                  "(1)" if sr > 0 else "(2)")

    return run.run(body)


def _y_samples(run: _Run):
    return run.values(y_function(run.pair, NABLA), "y_defined")


def check_mr22(pair: FunctionPair, a=None, b=None, case: int = 1,
               dense_samples: int = DEFAULT_DENSE_SAMPLES,
               tolerances: Tolerances = DEFAULT_TOLERANCES) -> RuleReport:
    """Monotonicity of ``phi/psi`` from the ratio direction and endpoint signs of Y.

    With ``s = sign(psi^nabla)``:

    1. ``Y >= 0`` at the end where the monotone Y is smallest: ``phi/psi``
       moves in direction ``s``.
    2. ``Y <= 0`` at the end where it is largest: direction ``-s``.
    3. ratio increasing, ``Y(first) <= 0 <= Y(b)``: Y changes sign from
       ``-`` to ``+`` once, ``phi/psi`` has two regimes.
    4. ratio decreasing, ``Y(first) >= 0 >= Y(b)``: the mirror image.
    """
    if case not in (1, 2, 3, 4):
        raise InvalidRange(f"case must be 1..4, got {case!r}")
    run = _Run(f"MR2.2({case})", pair, a, b, dense_samples, None, tolerances)
    p = run.pair

    def body():
        run.sign_check("psi_positive", run.values(p.psi, "psi_defined"),
                       strict=True, positive_only=True)
        s = run.sign_check("psi_nabla_nonzero_constant_sign",
                           _nabla_samples(run, p.psi, "psi_nabla_defined"), strict=True)
        want = {3: INCREASING, 4: DECREASING}.get(case)
        rv = run.monotone_check("ratio_monotone", run.values(derivative_ratio(p, NABLA),
                                                            "ratio_defined"), want)
        up = rv.kind.is_increasing if want is None else want == INCREASING
        yv = _y_samples(run)
        tol = run.tolerance(yv)
        (t_first, y_first), (t_last, y_last) = (yv[0][0].value, yv[0][1]), (yv[-1][0].value, yv[-1][1])
        if case == 1:
            t, y = (t_first, y_first) if up else (t_last, y_last)
            run.condition("y_endpoint_nonnegative", y >= -tol, ((t, y),))
        elif case == 2:
            t, y = (t_last, y_last) if up else (t_first, y_first)
            run.condition("y_endpoint_nonpositive", y <= tol, ((t, y),))
        elif case == 3:
            run.condition("y_first_nonpositive", y_first <= tol, ((t_first, y_first),))
            run.condition("y_last_nonnegative", y_last >= -tol, ((t_last, y_last),))
        else:
            run.condition("y_first_nonnegative", y_first >= -tol, ((t_first, y_first),))
            run.condition("y_last_nonpositive", y_last <= tol, ((t_last, y_last),))

        qv = run.values(quotient_function(p), "psi_nonzero")
        if case in (1, 2):
            direction = _direction_of(s if case == 1 else -s)
            return MonotoneConclusion("phi/psi", direction, run.verdict(qv), f"({case})")
        first_sign = -1 if case == 3 else 1
        split = _locate_split(yv, first_sign, tol)
        first = _direction_of(s * first_sign)
        return _split_conclusion(run, "phi/psi", qv, split, first, flip(first), f"({case})")

    rep = run.run(body)
    rep.notes.append("direction of phi/psi is keyed on sign(psi^nabla), which covers "
                     "both readings of the parenthesised alternatives")
    if case == 2:
        rep.notes.append("lower-case y in the endpoint condition read as the Y-function")
    return rep


def check_mr23(pair: FunctionPair, a=None, b=None, p_split=None,
               dense_samples: int = DEFAULT_DENSE_SAMPLES,
               tolerances: Tolerances = DEFAULT_TOLERANCES) -> RuleReport:
    """Unimodal ratio with ``phi(a) = psi(a) = 0``.

    Up-then-down ratio gives statements (i)/(ii), down-then-up gives
    (iii)/(iv); which one applies is keyed on whether ``Y(b)`` has the
    sign of ``psi^nabla/(psi psi^rho)``.  Statement (ii) is checked as
    increasing-then-decreasing.
    """
    run = _Run("MR2.3", pair, a, b, dense_samples, None, tolerances)
    p = run.pair

    def body():
        if p_split is None:
            run.condition("split_given", False, (), "p_split is required")
        ps = run.scale.point(p_split)
        run.condition("split_interior", run.a < ps < run.b, ((ps.value, 0),))
        f0, g0 = p.phi.value(run.a), p.psi.value(run.a)
        tol0 = run.tol.for_values([f0, g0], run.sampled)
        run.condition("phi_psi_vanish_at_a", abs(f0) <= tol0 and abs(g0) <= tol0,
                      ((run.a.value, f0), (run.a.value, g0)))
        dpsi = _nabla_samples(run, p.psi, "psi_nabla_defined")
        run.sign_check("psi_nabla_nonzero_constant_sign", dpsi, strict=True)

        weight = []
        for q, d in dpsi:
            den = p.psi.value(q) * p.psi.value(run.scale.rho(q))
            if den != 0:
                weight.append((q, d / den))
        s = run.sign_check("weight_constant_sign", weight, strict=False)

        ratio = run.values(derivative_ratio(p, NABLA), "ratio_defined")
        lv = run.verdict([(q, v) for q, v in ratio if q <= ps])
        rv = run.verdict([(q, v) for q, v in ratio if q >= ps])
        if lv.kind.is_increasing and rv.kind.is_decreasing:
            up = True
        elif lv.kind.is_decreasing and rv.kind.is_increasing:
            up = False
        else:
            steps = [st for st in (lv.decrease, lv.increase, rv.increase, rv.decrease) if st]
            wit = tuple(pt for st in steps[:2] for pt in ((st.t0, st.v0), (st.t1, st.v1)))
            run.condition("ratio_unimodal", False, wit,
                          f"left {lv.kind.value}, right {rv.kind.value}")
        run.condition("ratio_unimodal", True, (),
                      "increasing then decreasing" if up else "decreasing then increasing")

        yv = _y_samples(run)
        tol = run.tolerance(yv)
        y_b = yv[-1][1]
        s_y = _sign(y_b, tol) or s
        same = s_y == s
        qv = run.values(quotient_function(p), "psi_nonzero",
                        [q for q in run.pts if q != run.a])
        if up and same:
            return MonotoneConclusion("phi/psi", INCREASING, run.verdict(qv), "(i)")
        if not up and not same:
            return MonotoneConclusion("phi/psi", DECREASING, run.verdict(qv), "(iv)")
        split = _locate_split(yv, -s_y, tol)
        if up:
            return _split_conclusion(run, "phi/psi", qv, split, INCREASING, DECREASING, "(ii)")
        return _split_conclusion(run, "phi/psi", qv, split, DECREASING, INCREASING, "(iii)")

    rep = run.run(body)
    rep.notes.append("statement (ii) checked as increasing then decreasing "
                     "(the literal text repeats 'increasing' for both pieces)")
    return rep


def check_prop21(pair: FunctionPair, a=None, b=None,
                 dense_samples: int = DEFAULT_DENSE_SAMPLES,
                 tolerances: Tolerances = DEFAULT_TOLERANCES) -> RuleReport:
    """Nabla identities: ``Y^nabla = ratio^nabla psi^rho`` and the quotient formula.

    The sign symmetries of Y are recorded as advisory checks, including
    the literal middle equality ``Y(phi, psi) = Y(-phi, psi)``.
    """
    run = _Run("Prop2.1", pair, a, b, dense_samples, None, tolerances)
    p = run.pair

    def body():
        dpsi = _nabla_samples(run, p.psi, "psi_nabla_defined")
        zero = [(q.value, v) for q, v in dpsi if v == 0]
        run.condition("psi_nabla_nonzero", not zero, tuple(zero[:1]))
        psi_zero = [(q.value, v) for q, v in run.values(p.psi, "psi_defined") if v == 0]
        run.condition("psi_nonzero", not psi_zero, tuple(psi_zero[:1]))

        ratio = derivative_ratio(p, NABLA)
        pts = []
        for q, _ in dpsi:
            try:
                ratio.value(run.scale.rho(q))
            except OutsideKappaDomain:
                continue
            pts.append(q)
        acc = _Residuals(run.tol.identity)
        for q in pts:
            try:
                y_deriv = y_nabla_deriv_direct(p, q)
            except OutsideKappaDomain:
                continue
            acc.add("y_nabla", q, y_nabla_deriv_formula(p, q), y_deriv)
        for q, _ in dpsi:
            direct = quotient_nabla_direct(p, q)
            acc.add("quotient_via_y", q, quotient_nabla_via_y(p, q), direct)
            acc.add("quotient_rule", q, quotient_nabla_rule(p, q), direct)
        middle_ok = derivable_ok = True
        for q, _ in dpsi:
            rec = y_symmetry_check(p, q)
            derivable_ok &= rec.derivable_holds
            middle_ok &= rec.printed_middle_holds
        run.advise(HypothesisCheck("y_symmetry_derivable", run.passed if derivable_ok
                                   else Status.FAIL, (), "Y even in psi, odd in phi"))
        run.advise(HypothesisCheck("y_symmetry_printed_middle", run.passed if middle_ok
                                   else Status.FAIL, (), "Y(phi, psi) = Y(-phi, psi)"))
        return acc.conclusion("nabla identities")

    return run.run(body)


class _Residuals:
    """Accumulates ``|formula - direct| <= tol*(1 + |direct|)`` over named identities."""

    def __init__(self, tol: float):
        self.tol = tol
        self.worst: dict[str, tuple[float, Optional[float]]] = {}
        self.failures = 0
        self.count = 0

    def add(self, name: str, q: PointRef, formula: Real, direct: Real):
        r = abs(formula - direct)
        bound = self.tol * (1 + abs(float(direct)))
        self.count += 1
        if r > bound:
            self.failures += 1
        rel = float(r) / (1 + abs(float(direct)))
        if name not in self.worst or rel > self.worst[name][0]:
            self.worst[name] = (rel, q.value)

    def conclusion(self, target: str, extra: Optional[dict] = None) -> IdentityConclusion:
        worst = max(self.worst.values(), default=(0.0, None))
        per = {k: {"max_relative_residual": v[0], "at": v[1]} for k, v in self.worst.items()}
        return IdentityConclusion(target, self.count, worst[0], worst[1], self.tol,
                                  self.failures, {"identities": per, **(extra or {})})


# -- diamond rules --------------------------------------------------------------

def check_prop32(pair: FunctionPair, alpha, a=None, b=None,
                 dense_samples: int = DEFAULT_DENSE_SAMPLES,
                 tolerances: Tolerances = DEFAULT_TOLERANCES) -> RuleReport:
    """Direction of ``phi/psi`` from the diamond quotient formula's sign pattern.

    ``D = psi psi^sigma psi^rho`` must keep a strict sign and the numerator
    ``N = phi^d psi^s psi^r - a phi^s psi^r psi^D - (1-a) phi^r psi^s psi^N``
    a weak one; the claimed direction is ``sign(N D)``.  For ``0 < alpha < 1``
    a nonnegative diamond derivative does not force monotonicity, so this
    rule can fail its conclusion; the report then carries the counterexample.
    """
    run = _Run("Prop3.2", pair, a, b, dense_samples, alpha, tolerances)
    p = run.pair
    k = DerivKind.diamond(alpha)

    def body():
        terms = []
        for q in run.pts:
            try:
                terms.append((q, diamond_quotient_terms(p, k.alpha, q)))
            except OutsideKappaDomain:
                continue
            except ZeroDenominator as e:
                run.condition("denominator_constant_sign", False, ((e.point, 0),), str(e))
        run.condition("diamond_domain_nonempty", bool(terms))
        d = run.sign_check("denominator_constant_sign",
                           [(q, t.denominator) for q, t in terms], strict=True)
        nums = [(q, t.numerator) for q, t in terms]
        tol = run.tolerance(nums)
        n = -1 if all(v <= tol for _, v in nums) and any(v < -tol for _, v in nums) else 1
        bad = [(q.value, v) for q, v in nums if v * n < -tol]
        run.condition("numerator_constant_sign", not bad, tuple(bad[:1]),
                      "numerator >= 0" if n > 0 else "numerator <= 0 (reversed branch)")

        acc = _Residuals(run.tol.identity)
        agree = True
        for q, t in terms:
            ref = diamond_quotient_direct(p, k.alpha, q)
            acc.add("quotient_formula", q, t.value, ref)
            rt = run.tolerance([(q, ref)])
            if _sign(ref, rt) * n * d < 0:
                agree = False
        run.advise(HypothesisCheck("reference_sign_agrees", run.passed if agree else Status.FAIL,
                                   (), "sign of the direct diamond derivative of phi/psi"))
        res = acc.conclusion("diamond quotient formula")
        run.report.residuals = res.to_dict()
        qv = run.values(quotient_function(p), "psi_nonzero")
        return MonotoneConclusion("phi/psi", _direction_of(n * d), run.verdict(qv),
                                  "(1)" if d > 0 else "(2)")

    return run.run(body)


def check_mr31(pair: FunctionPair, alpha, a=None, b=None,
               dense_samples: int = DEFAULT_DENSE_SAMPLES,
               tolerances: Tolerances = DEFAULT_TOLERANCES) -> RuleReport:
    """Monotonicity of ``phi^d/psi^d`` from the sign of its diamond derivative.

    The gating sign is that of the direct diamond difference quotient of the
    tabulated ratio; the literal expansion and its corrected form are
    evaluated alongside and their residuals reported.
    """
    run = _Run("MR3.1", pair, a, b, dense_samples, alpha, tolerances)
    p = run.pair
    k = DerivKind.diamond(alpha)

    def body():
        dpsi = run.values(DerivativeFunction(p.psi, run.scale, k), "psi_diamond_defined")
        zero = [(q.value, v) for q, v in dpsi if v == 0]
        run.condition("psi_diamond_nonzero", not zero, tuple(zero[:1]))
        ratio_samples = run.values(derivative_ratio(p, k), "ratio_defined")

        rows = []
        for q in run.pts:
            try:
                rows.append((q, ratio_diamond_deriv_formula(p, k.alpha, q)))
            except OutsideKappaDomain:
                continue
            except ZeroDenominator as e:
                run.condition("triple_product_nonzero", False, ((e.point, 0),), str(e))
        run.condition("triple_product_nonzero", True, (),
                      f"{len(rows)} points of the doubly reduced grid")
        run.condition("reduced_domain_nonempty", bool(rows))
        ref = [(q, r.reference) for q, r in rows]
        tol = run.tolerance(ref)
        n = -1 if all(v <= tol for _, v in ref) and any(v < -tol for _, v in ref) else 1
        bad = [(q.value, v) for q, v in ref if v * n < -tol]
        run.condition("expansion_constant_sign", not bad, tuple(bad[:1]),
                      "reference derivative >= 0" if n > 0 else "reference derivative <= 0")

        printed = [(q, r.printed) for q, r in rows]
        ptol = run.tolerance(printed)
        pbad = [(q.value, v) for q, v in printed if v * n < -ptol]
        run.advise(HypothesisCheck("printed_expansion_sign", Status.FAIL if pbad else run.passed,
                                   tuple(pbad[:1]), "literal expansion, same sign requirement"))
        acc = _Residuals(run.tol.identity)
        for q, r in rows:
            acc.add("corrected_expansion", q, r.corrected, r.reference)
        printed_res = max((float(abs(r.residual)) / (1 + abs(float(r.reference)))
                           for _, r in rows), default=0.0)
        res = acc.conclusion("ratio diamond expansion",
                             {"printed_max_relative_residual": printed_res})
        run.report.residuals = res.to_dict()
        return MonotoneConclusion("phi^d/psi^d", _direction_of(n), run.verdict(ratio_samples))

    return run.run(body)


def check_prop31ii(pair: FunctionPair, alpha, a=None, b=None,
                   dense_samples: int = DEFAULT_DENSE_SAMPLES,
                   tolerances: Tolerances = DEFAULT_TOLERANCES) -> RuleReport:
    """Diamond derivative of the diamond Y-function: expansions versus the direct quotient.

    The conclusion is the derived expansion's agreement with the reference;
    the literal expansion and the ``phi^d psi^N`` reading are summarised in
    ``residuals`` whichever way they come out.
    """
    run = _Run("Prop3.1ii", pair, a, b, dense_samples, alpha, tolerances)
    p = run.pair
    k = DerivKind.diamond(alpha)

    def body():
        rows = []
        for q in run.pts:
            try:
                rows.append((q, y_diamond_deriv_formula(p, k.alpha, q)))
            except OutsideKappaDomain:
                continue
        run.condition("domain_nonempty", bool(rows))
        acc = _Residuals(run.tol.identity)
        printed = alt = 0.0
        printed_fail = alt_fail = 0
        for q, r in rows:
            acc.add("derived_expansion", q, r.derived, r.reference)
            scale = 1 + abs(float(r.reference))
            pr, ar = float(abs(r.residual)) / scale, float(abs(r.alt_residual)) / scale
            printed, alt = max(printed, pr), max(alt, ar)
            printed_fail += pr > run.tol.identity
            alt_fail += ar > run.tol.identity
        summary = {
            "printed_max_relative_residual": printed,
            "printed_points_off": printed_fail,
            "alt_reading_max_relative_residual": alt,
            "alt_reading_points_off": alt_fail,
        }
        res = acc.conclusion("diamond Y derivative", summary)
        run.report.residuals = res.to_dict()
        return res

    return run.run(body)


RULE_IDS = ("MR2.1", "Prop2.1", "Prop2.2", "MR2.2", "MR2.3", "Prop3.2", "MR3.1", "Prop3.1ii")
DIAMOND_RULES = ("Prop3.2", "MR3.1", "Prop3.1ii")


def canonical_rule(name: str) -> str:
    """Case-insensitive lookup of a rule id (``"mr2.1"`` -> ``"MR2.1"``)."""
    key = name.strip().lower().replace("(", "").replace(")", "")
    for rid in RULE_IDS:
        if rid.lower() == key:
            return rid
    raise InvalidRange(f"unknown rule {name!r}; expected one of {', '.join(RULE_IDS)}")


def check(rule: str, pair: FunctionPair, a=None, b=None, *, anchor: str = "alpha",
          case: Optional[int] = None, p_split=None, alpha=None,
          dense_samples: int = DEFAULT_DENSE_SAMPLES,
          tolerances: Tolerances = DEFAULT_TOLERANCES) -> RuleReport:
    """Run the checker for ``rule`` with the parameters it uses."""
    rule = canonical_rule(rule)
    kw = {"dense_samples": dense_samples, "tolerances": tolerances}
    if rule in DIAMOND_RULES and alpha is None:
        raise InvalidRange(f"{rule} needs alpha")
    if rule == "MR2.1":
        return check_mr21(pair, a, b, anchor, **kw)
    if rule == "Prop2.1":
        return check_prop21(pair, a, b, **kw)
    if rule == "Prop2.2":
        return check_prop22(pair, a, b, **kw)
    if rule == "MR2.2":
        if case is None:
            raise InvalidRange("MR2.2 needs a case (1-4)")
        return check_mr22(pair, a, b, int(case), **kw)
    if rule == "MR2.3":
        if p_split is None:
            raise InvalidRange("MR2.3 needs a split point")
        return check_mr23(pair, a, b, p_split, **kw)
    if rule == "Prop3.2":
        return check_prop32(pair, alpha, a, b, **kw)
    if rule == "MR3.1":
        return check_mr31(pair, alpha, a, b, **kw)
    return check_prop31ii(pair, alpha, a, b, **kw)


__all__ = [
    "RULE_IDS", "DIAMOND_RULES", "canonical_rule", "check",
    "Monotonicity", "Confidence", "Status", "Tolerances", "Step", "MonotoneVerdict",
    "HypothesisCheck", "MonotoneConclusion", "SplitConclusion", "IdentityConclusion",
    "RuleReport", "classify_values", "classify_monotone", "anchored_quotient",
    "check_mr21", "check_prop22", "check_mr22", "check_mr23", "check_prop21",
    "check_prop32", "check_mr31", "check_prop31ii", "INCREASING", "DECREASING", "CONSTANT",
    "DEFAULT_DENSE_SAMPLES", "DEFAULT_TOLERANCES",
]
