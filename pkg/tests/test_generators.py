import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tscale.calculus import NABLA, ExprFunction, deriv
from tscale.errors import ConfigError, InvalidRange
from tscale.generators import (
    GenConfig,
    PsiProfile,
    RatioProfile,
    SplitMix64,
    gen_finite_scale,
    gen_pair_with_ratio,
    gen_unimodal_ratio_pair,
    instance_from_dict,
    psi_table,
    ratio_table,
    rule_instance,
)
from tscale.rules import RULE_IDS, check_mr23, classify_monotone
from tscale.timescale import parse_scale
from tscale.yfunction import derivative_ratio


def test_splitmix_reference_outputs():
    rng = SplitMix64(0)
    assert [rng.next_u64() for _ in range(3)] == [
        0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F,
    ]


def test_splitmix_helpers_stay_in_range():
    rng = SplitMix64(99)
    for _ in range(200):
        assert 3 <= rng.randint(3, 7) <= 7
        assert -1 <= rng.uniform(-1, 2) < 2
        d = rng.dyadic(Fraction(1, 3), 2)
        assert Fraction(1, 3) <= d <= 2 and (d * 256).denominator == 1


def test_scale_is_deterministic():
    cfg = GenConfig(seed=1, n_points=(5, 5))
    a, b = gen_finite_scale(cfg), gen_finite_scale(cfg)
    assert a.components == b.components
    pts = [p.value for p in a.points()]
    assert len(pts) == 5 and pts == sorted(set(pts))
    assert all(float(f"{v:.12g}") == v and 0 <= v <= 10 for v in pts)


def test_seeds_differ():
    a = gen_finite_scale(GenConfig(seed=1))
    b = gen_finite_scale(GenConfig(seed=2))
    assert a.components != b.components


@pytest.mark.parametrize("bad", [dict(n_points=(2, 5)), dict(n_points=(6, 5)),
                                 dict(coord_range=(1.0, 1.0)), dict(ratio_profile="wobbly")])
def test_config_validation(bad):
    with pytest.raises((ConfigError, ValueError)):
        GenConfig(seed=0, **bad)


def test_pair_with_ratio_example():
    ts = parse_scale("lattice(0,1,5)")
    pr = gen_pair_with_ratio(ts, ExprFunction("2*x - 1"), ExprFunction("x"), 0)
    assert pr.phi.values == {float(t): t * t for t in range(5)}


def test_pair_with_constant_ratio():
    ts = parse_scale("points(0,0.5,2,3.25)")
    psi = ExprFunction("x^2 + 1")
    pr = gen_pair_with_ratio(ts, ExprFunction("3"), psi, 5)
    for p in ts.points():
        assert pr.phi.value(p) == 3 * pr.psi.value(p) + (5 - 3 * 1)


def test_unimodal_tent_example():
    ts = parse_scale("lattice(0,1,7)")
    cfg = GenConfig(seed=0, ratio_profile=RatioProfile.UNIMODAL_UP)
    pr = gen_unimodal_ratio_pair(ts, 3, cfg, height=3, slopes=(1, 1))
    r = derivative_ratio(pr, NABLA)
    assert [r.value(p) for p in ts.points()[1:]] == [3 - abs(t - 3) for t in range(1, 7)]
    assert pr.phi.value(ts.min) == pr.psi.value(ts.min) == 0


def test_unimodal_peak_at_second_point():
    ts = parse_scale("lattice(0,1,6)")
    cfg = GenConfig(seed=4, ratio_profile=RatioProfile.UNIMODAL_UP)
    pr = gen_unimodal_ratio_pair(ts, 1, cfg)
    assert check_mr23(pr, p_split=1).outcome == "VERIFIED"
    with pytest.raises(InvalidRange):
        gen_unimodal_ratio_pair(ts, 0, cfg)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**63), st.sampled_from([RatioProfile.INCREASING, RatioProfile.DECREASING,
                                                RatioProfile.CONSTANT]),
       st.sampled_from(list(PsiProfile)))
def test_generated_ratio_is_exact(seed, ratio, psi):
    cfg = GenConfig(seed=seed, n_points=(3, 20), ratio_profile=ratio, psi_profile=psi)
    ts = gen_finite_scale(cfg)
    r = ratio_table(ts, ratio, cfg.rng(4))
    pr = gen_pair_with_ratio(ts, r, psi_table(ts, psi, cfg.rng(2)))
    got = derivative_ratio(pr, NABLA)
    for p in ts.points()[1:]:
        assert got.value(p) == r.value(p)
        assert deriv(pr.psi, ts, p, NABLA) != 0
    verdict = classify_monotone(r, ts)
    assert verdict.kind.satisfies(ratio.value if ratio is not RatioProfile.CONSTANT else "constant")


@pytest.mark.parametrize("rule", RULE_IDS)
def test_instances_are_reproducible_and_serializable(rule):
    a, b = rule_instance(rule, 123), rule_instance(rule, 123)
    assert a.to_json() == b.to_json()
    back = instance_from_dict(json.loads(a.to_json()))
    assert back.to_json() == a.to_json()
    assert back.pair.phi.values == a.pair.phi.values


def test_unknown_rule():
    with pytest.raises(ConfigError):
        rule_instance("MR7", 0)
