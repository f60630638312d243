import pytest
from hypothesis import given, strategies as st

from tscale.errors import EmptyScale, InvalidRange, NotInScale, ScaleLiteralError
from tscale.timescale import Density, Interval, Points, make_scale, parse_scale


@pytest.fixture
def mixed():
    return make_scale([Interval(0, 1), Points([2, 3])])


def test_union_components(mixed):
    assert len(mixed.components) == 2
    assert mixed.min.value == 0 and mixed.max.value == 3


def test_points_are_sorted():
    ts = make_scale([Points([3, 1, 2])])
    assert ts.components == (Points([1, 2, 3]),)


def test_shared_point_is_absorbed_by_interval():
    ts = make_scale([Interval(0, 1), Points([1, 2])])
    assert ts.components == (Interval(0, 1), Points([2]))
    assert ts.in_interval(1)


def test_empty_scale_rejected():
    with pytest.raises(EmptyScale):
        make_scale([])


@pytest.mark.parametrize("p, expected", [(1, 2), (0.5, 0.5), (3, 3), (2, 3)])
def test_sigma(mixed, p, expected):
    assert mixed.sigma(p).value == expected


@pytest.mark.parametrize("p, expected", [(2, 1), (3, 2), (0.5, 0.5), (0, 0)])
def test_rho(mixed, p, expected):
    assert mixed.rho(p).value == expected


def test_rho_at_minimum():
    assert make_scale([Points([1, 2, 3])]).rho(1).value == 1


def test_graininess():
    z = parse_scale("lattice(0,1,6)")
    assert (z.mu(3), z.nu(3)) == (1, 1)
    ts = make_scale([Interval(0, 1), Points([2])])
    assert (ts.mu(1), ts.nu(1)) == (1, 0)
    q = parse_scale("qscale(2,1,4)")
    assert [p.value for p in q.points()] == [1, 2, 4, 8]
    assert (q.mu(2), q.nu(2)) == (2, 1)


def test_classify():
    ts = make_scale([Interval(0, 1), Points([2])])
    c = ts.classify(1)
    assert (c.right, c.left) == (Density.SCATTERED, Density.DENSE)
    c = make_scale([Points([1, 2, 3])]).classify(2)
    assert (c.right, c.left) == (Density.SCATTERED, Density.SCATTERED)
    c = make_scale([Interval(0, 1)]).classify(0.5)
    assert (c.right, c.left) == (Density.DENSE, Density.DENSE)


def test_grid_examples():
    assert [p.value for p in parse_scale("points(0,1,2,3)").grid(0, 3)] == [0, 1, 2, 3]
    assert [p.value for p in make_scale([Interval(0, 1)]).grid(0, 1, 3)] == [0, 0.25, 0.5, 0.75, 1]
    ts = make_scale([Interval(0, 1), Points([2])])
    assert [p.value for p in ts.grid(0, 2, 1)] == [0, 0.5, 1, 2]


def test_grid_rejects_reversed_range():
    with pytest.raises(InvalidRange):
        parse_scale("points(0,1,2)").grid(2, 0)


def test_point_not_in_scale(mixed):
    with pytest.raises(NotInScale):
        mixed.point(1.5)


def test_restrict(mixed):
    sub = mixed.restrict(0.5, 2)
    assert sub.min.value == 0.5 and sub.max.value == 2
    assert sub.sigma(1).value == 2


@pytest.mark.parametrize("text", [
    "interval(0,1)+points(2,3)",
    "lattice(0,0.5,7)",
    "qscale(3,1,4)+interval(100,101)",
    "points(-2,-1,0,1,2)",
    "points(0.1,0.25)+interval(1,2)+points(3)",
])
def test_literal_round_trip(text):
    ts = parse_scale(text)
    again = parse_scale(str(ts))
    assert again.components == ts.components


@pytest.mark.parametrize("text", ["", "interval(1,0)", "lattice(0,-1,3)", "blob(1)", "points(1,"])
def test_bad_literals(text):
    with pytest.raises((ScaleLiteralError, EmptyScale, InvalidRange)):
        parse_scale(text)


coords = st.lists(st.integers(-1000, 1000), min_size=2, max_size=30, unique=True)


@given(coords)
def test_jumps_are_inverse_on_discrete_scales(vals):
    ts = make_scale([Points([v / 8 for v in vals])])
    pts = ts.points()
    for p in pts[:-1]:
        assert ts.rho(ts.sigma(p)) == p
    for p in pts[1:]:
        assert ts.sigma(ts.rho(p)) == p
        assert ts.nu(p) == ts.mu(ts.rho(p)) > 0
