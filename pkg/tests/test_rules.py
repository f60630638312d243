from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tscale.calculus import DerivKind, ExprFunction, TableFunction
from tscale.generators import rule_instance
from tscale.rules import (
    Monotonicity,
    Status,
    canonical_rule,
    check,
    check_mr21,
    check_mr22,
    check_mr23,
    check_mr31,
    check_prop21,
    check_prop22,
    check_prop31ii,
    check_prop32,
    classify_monotone,
    classify_values,
)
from tscale.errors import InvalidRange
from tscale.timescale import parse_scale
from tscale.yfunction import FunctionPair, derivative_ratio, quotient_function

HALF = Fraction(1, 2)
INC = Monotonicity.STRICTLY_INCREASING


def pair(phi, psi, scale):
    return FunctionPair(ExprFunction(phi), ExprFunction(psi), parse_scale(scale))


def statuses(rep):
    return {c.name: c.status for c in rep.hypothesis_checks}


# -- classification -------------------------------------------------------------

def test_classify_examples():
    z = parse_scale("lattice(0,1,6)")
    v = classify_monotone(ExprFunction("x"), z)
    assert v.kind is INC and v.confidence.value == "EXACT"
    v = classify_monotone(ExprFunction("x^2"), parse_scale("lattice(-2,1,5)"))
    assert v.kind is Monotonicity.NON_MONOTONE
    dec, inc = v.witness
    assert (dec.t0, dec.t1, inc.t0, inc.t1) == (-2, -1, 1, 2)
    assert classify_monotone(ExprFunction("3"), z).kind is Monotonicity.CONSTANT


def test_classify_weak_and_tolerance():
    assert classify_values([(0, 1), (1, 1), (2, 2)]).kind is Monotonicity.WEAKLY_INCREASING
    assert classify_values([(0, 1.0), (1, 1.0 - 1e-15)], 1e-12).kind is Monotonicity.CONSTANT
    assert classify_values([(0, 1.0), (1, 1.0 - 1e-15)]).kind is Monotonicity.STRICTLY_DECREASING


def test_dense_scale_is_sampled():
    v = classify_monotone(ExprFunction("exp(x)"), parse_scale("interval(0,1)+points(2)"))
    assert v.kind is INC and v.confidence.value == "SAMPLED"


# -- MR 2.1 ------------------------------------------------------------------------

def test_anchored_quotient_example():
    rep = check_mr21(pair("x^2", "x", "lattice(0,1,4)"))
    assert rep.outcome == "VERIFIED" and rep.rule_id == "MR2.1[alpha]"
    assert set(statuses(rep).values()) == {Status.PASS}
    assert rep.conclusion.verdict.kind is INC
    assert [c.status for c in rep.advisory_checks] == [Status.PASS]


def test_anchored_quotient_constant_ratio():
    rep = check_mr21(pair("3*x + 1", "x", "lattice(0,1,4)"))
    assert rep.outcome == "VERIFIED"
    assert rep.conclusion.verdict.kind is Monotonicity.CONSTANT


def test_anchored_quotient_dense_is_best_effort():
    rep = check_mr21(pair("x^2", "x", "interval(1,2)"))
    assert rep.outcome == "VERIFIED"
    assert set(statuses(rep).values()) == {Status.BEST_EFFORT}
    assert rep.confidence.value == "SAMPLED"


def test_anchored_quotient_degenerate_anchor_is_a_hypothesis_failure():
    # psi(2) == psi(0): the anchored quotient is undefined at s = 2
    rep = check_mr21(pair("x", "x^2 - 2*x", "lattice(0,1,4)"))
    assert rep.outcome == "HYPOTHESIS_FAILED"
    failed = {c.name for c in rep.failed_checks()}
    assert "psi_nabla_nonzero_constant_sign" in failed


def test_anchored_quotient_literal_psi_hypothesis_is_reported():
    rep = check_mr21(pair("x^2", "x", "lattice(-2,1,5)"))
    advisory = {c.name: c.status for c in rep.advisory_checks}
    assert advisory["psi_sign_constant"] is Status.FAIL
    assert rep.outcome == "VERIFIED"


@pytest.mark.parametrize("anchor", ["alpha", "beta"])
def test_anchored_quotient_negation_coherence(anchor):
    base = rule_instance("MR2.1", 11).pair
    rep = check_mr21(base, anchor=anchor)
    flipped = check_mr21(base.negated(phi=True), anchor=anchor)
    both = check_mr21(base.negated(phi=True, psi=True), anchor=anchor)
    assert flipped.conclusion.verdict.kind is rep.conclusion.verdict.kind.negate()
    assert both.conclusion.verdict.kind is rep.conclusion.verdict.kind


# -- Prop 2.2 and MR 2.2 ---------------------------------------------------------------

def test_y_direction_examples():
    rep = check_prop22(pair("x^2", "x", "lattice(1,1,5)"))
    assert rep.outcome == "VERIFIED" and rep.conclusion.verdict.kind is INC
    neg = check_prop22(pair("x^2", "-x", "lattice(1,1,5)"))
    assert neg.outcome == "VERIFIED" and neg.conclusion.statement == "(2)"
    const = check_prop22(pair("2*x - 5", "x", "lattice(1,1,5)"))
    assert const.conclusion.verdict.kind is Monotonicity.CONSTANT


def test_endpoint_sign_case1_example():
    rep = check_mr22(pair("x^2", "x", "lattice(1,1,5)"), case=1)
    assert rep.outcome == "VERIFIED" and rep.conclusion.expected == "increasing"


def test_endpoint_sign_case2_by_negating_phi():
    rep = check_mr22(pair("-x^2", "x", "lattice(1,1,5)"), case=2)
    assert rep.outcome == "VERIFIED" and rep.conclusion.expected == "decreasing"


def test_endpoint_sign_negative_psi_fails_with_witness():
    rep = check_mr22(pair("x^2", "-x", "lattice(1,1,5)"), case=1)
    assert rep.outcome == "HYPOTHESIS_FAILED"
    (bad,) = rep.failed_checks()
    assert bad.name == "psi_positive" and bad.witness == ((1.0, -1.0),)


@pytest.mark.parametrize("case", [3, 4])
def test_endpoint_sign_split_cases(case):
    for seed in range(5):
        inst = rule_instance("MR2.2", seed, case=case)
        rep = check_mr22(inst.pair, case=case)
        assert rep.outcome == "VERIFIED"
        c = rep.conclusion
        assert c.left.kind.satisfies(c.first) and c.right.kind.satisfies(c.second)


def test_endpoint_sign_endpoint_condition_enforced():
    # Y(first) = 2 > 0, so the case 2 condition Y(last) <= 0 fails
    rep = check_mr22(pair("x^2", "x", "lattice(1,1,5)"), case=2)
    assert rep.outcome == "HYPOTHESIS_FAILED"


# -- MR 2.3 --------------------------------------------------------------------------

MIRROR = {"(i)": "(iv)", "(iv)": "(i)", "(ii)": "(iii)", "(iii)": "(ii)"}


def test_unimodal_ratio_statements():
    seen = set()
    for seed in range(40):
        inst = rule_instance("MR2.3", seed)
        rep = check_mr23(inst.pair, p_split=inst.params["p_split"])
        assert rep.outcome == "VERIFIED", seed
        seen.add(rep.conclusion.statement)
        neg = check_mr23(inst.pair.negated(phi=True), p_split=inst.params["p_split"])
        assert neg.outcome == "VERIFIED"
        assert neg.conclusion.statement == MIRROR[rep.conclusion.statement]
    assert seen == {"(i)", "(ii)", "(iii)", "(iv)"}
    assert any("(ii)" in n for n in rep.notes)


def test_unimodal_ratio_requires_zero_start():
    rep = check_mr23(pair("x^2 + 1", "x", "lattice(0,1,6)"), p_split=3)
    assert rep.outcome == "HYPOTHESIS_FAILED"


# -- Prop 2.1 --------------------------------------------------------------------------

def test_nabla_identities_and_symmetry():
    rep = check_prop21(pair("x^2", "x", "lattice(1,1,6)"))
    assert rep.outcome == "VERIFIED"
    advisory = {c.name: c.status for c in rep.advisory_checks}
    assert advisory["y_symmetry_printed_middle"] is Status.FAIL


# -- diamond rules -------------------------------------------------------------------

def test_quotient_sign_rule_examples():
    rep = check_prop32(pair("x^2", "x", "lattice(1,1,5)"), HALF)
    assert rep.outcome == "VERIFIED" and rep.conclusion.expected == "increasing"
    flipped = check_prop32(pair("x^2", "-x", "lattice(1,1,5)"), HALF)
    assert flipped.outcome == "VERIFIED" and flipped.conclusion.expected == "decreasing"
    const = check_prop32(pair("3*x", "x", "lattice(1,1,5)"), HALF)
    assert const.conclusion.verdict.kind is Monotonicity.CONSTANT


def test_quotient_sign_rule_zero_denominator_is_hypothesis_failure():
    rep = check_prop32(pair("x^2", "x", "lattice(0,1,5)"), HALF)
    assert rep.outcome == "HYPOTHESIS_FAILED"
    assert "denominator_constant_sign" in {c.name for c in rep.failed_checks()}


def test_diamond_ratio_rule_example():
    rep = check_mr31(pair("x^3", "x", "lattice(0,1,7)"), 0)
    assert rep.outcome == "VERIFIED" and rep.conclusion.verdict.kind is INC
    assert rep.residuals["max_residual"] == 0


def test_diamond_ratio_rule_constant_ratio():
    rep = check_mr31(pair("2*x", "x", "lattice(0,1,7)"), HALF)
    assert rep.conclusion.verdict.kind is Monotonicity.CONSTANT


def test_diamond_ratio_rule_printed_expansion_residual_is_logged():
    rep = check_mr31(pair("x^4 + x", "x^2 + 1", "lattice(0,1,8)"), HALF)
    assert rep.outcome == "VERIFIED"
    assert rep.residuals["max_residual"] == 0
    assert rep.residuals["extra"]["printed_max_relative_residual"] > 1e-6


def _zigzag_pair(first=0):
    # diamond-1/2 ratio 0,10,1,11,2,12 on interior points: every centred
    # difference is positive but the ratio itself is not monotone
    n = 8
    ts = parse_scale(f"lattice({first},1,{n})")
    g = [0, 10, 1, 11, 2, 12]
    phi = {first: 0, first + 1: 0}
    for i, v in enumerate(g, start=1):
        phi[first + i + 1] = phi[first + i - 1] + 2 * v
    psi = {first + i: first + i for i in range(n)}
    return FunctionPair(TableFunction(phi, ts), TableFunction(psi, ts), ts)


def test_diamond_ratio_rule_fails_for_intermediate_alpha():
    pr = _zigzag_pair()
    rep = check_mr31(pr, HALF)
    assert rep.outcome == "CONCLUSION_FAILED"
    assert set(statuses(rep).values()) == {Status.PASS}
    step = rep.counterexample["step"]
    assert step == [[2.0, 10.0], [3.0, 1.0]]
    ratio = derivative_ratio(pr, DerivKind.diamond(HALF))
    assert ratio.value(pr.scale.point(3)) < ratio.value(pr.scale.point(2))


def test_quotient_sign_rule_fails_for_intermediate_alpha():
    ts = parse_scale("lattice(1,1,8)")
    r = [0, 10, 1, 11, 2, 12, 3, 13]
    pts = ts.points()
    phi = TableFunction({p.value: v * p.value for p, v in zip(pts, r)}, ts)
    psi = TableFunction({p.value: p.value for p in pts}, ts)
    rep = check_prop32(FunctionPair(phi, psi, ts), HALF)
    assert rep.outcome == "CONCLUSION_FAILED"
    assert set(statuses(rep).values()) == {Status.PASS}
    (t0, v0), (t1, v1) = rep.counterexample["step"]
    q = quotient_function(FunctionPair(phi, psi, ts))
    assert q.value(ts.point(t1)) < q.value(ts.point(t0))


def test_diamond_y_derivative_readings_in_checker():
    rep = check_prop31ii(rule_instance("Prop3.1ii", 5, alpha=HALF).pair, HALF)
    assert rep.outcome == "VERIFIED"
    extra = rep.residuals["extra"]
    assert extra["alt_reading_max_relative_residual"] == 0
    assert extra["printed_max_relative_residual"] > 0


# -- dispatcher ----------------------------------------------------------------------

def test_canonical_rule_names():
    assert canonical_rule("mr2.1") == "MR2.1"
    assert canonical_rule("Prop3.1(ii)") == "Prop3.1ii"
    with pytest.raises(InvalidRange):
        canonical_rule("MR9.9")


def test_report_shape_is_stable():
    rep = check("MR2.1", pair("x^2", "x", "lattice(0,1,4)"))
    assert list(rep.to_dict()) == [
        "rule_id", "scale", "interval", "alpha", "outcome", "confidence",
        "hypothesis_checks", "conclusion", "counterexample", "advisory_checks",
        "residuals", "tolerances", "notes",
    ]


# -- properties ------------------------------------------------------------------------

RULES = ["MR2.1", "Prop2.1", "Prop2.2", "MR2.2", "MR2.3", "Prop3.2", "MR3.1", "Prop3.1ii"]


def _run(inst):
    p = inst.params
    return check(inst.rule, inst.pair, anchor=p.get("anchor", "alpha"), case=p.get("case"),
                 p_split=p.get("p_split"), alpha=p.get("alpha"))


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(RULES), st.integers(0, 2**62))
def test_generated_instances_verify(rule, seed):
    assert _run(rule_instance(rule, seed, n_points=(5, 15))).outcome == "VERIFIED"


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**62), st.sampled_from(["MR2.1", "Prop2.2", "MR3.1", "Prop3.2"]))
def test_failed_checks_carry_reproducible_witnesses(seed, rule):
    inst = rule_instance(rule, seed, n_points=(5, 12))
    # negating psi alone breaks sign assumptions of some rules
    rep = check(rule, inst.pair.negated(psi=True), anchor=inst.params.get("anchor", "alpha"),
                alpha=inst.params.get("alpha"))
    ts = inst.pair.scale
    for c in rep.failed_checks():
        for t, _ in c.witness:
            ts.point(t)
    if rep.outcome == "CONCLUSION_FAILED":
        (t0, v0), (t1, v1) = rep.counterexample["step"]
        assert t0 < t1 and v0 != v1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**62))
def test_negating_phi_flips_diamond_ratio_verdict(seed):
    inst = rule_instance("MR3.1", seed, n_points=(5, 12))
    a = inst.params["alpha"]
    rep = check_mr31(inst.pair, a)
    neg = check_mr31(inst.pair.negated(phi=True), a)
    assert neg.conclusion.verdict.kind is rep.conclusion.verdict.kind.negate()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**62))
def test_negating_phi_flips_y_direction_verdict(seed):
    inst = rule_instance("Prop2.2", seed, n_points=(5, 12))
    rep = check_prop22(inst.pair)
    neg = check_prop22(inst.pair.negated(phi=True))
    assert neg.outcome == rep.outcome == "VERIFIED"
    assert neg.conclusion.verdict.kind is rep.conclusion.verdict.kind.negate()
