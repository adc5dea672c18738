import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heatnet.errors import GridTooCoarse, NonFiniteField, ValidationError
from heatnet.experiments.scenario import ic_profiles
from heatnet.field import (
    AgentField,
    Grid,
    TrigProfile,
    boundary_trace,
    constant_field,
    derivative_array,
    h_norm,
    lemma1_residual,
    sample_profile,
    spatial_derivative,
    trapezoid,
)

terms = st.tuples(st.floats(-5, 5), st.floats(0, 4), st.sampled_from(["cos", "sin"]))
profiles = st.builds(TrigProfile, st.floats(-10, 10), st.lists(terms, max_size=3).map(tuple))


def test_grid_basics():
    g = Grid(30)
    assert g.spacing == pytest.approx(1 / 29)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == 1.0
    assert g.weights.sum() == pytest.approx(1.0)
    with pytest.raises(GridTooCoarse):
        Grid(2)


def test_field_validation():
    g = Grid(5)
    with pytest.raises(ValidationError):
        AgentField(np.zeros((2, 4)), g)
    with pytest.raises(NonFiniteField):
        AgentField(np.array([[0, 1, np.nan, 0, 0]]), g)
    f = constant_field(g, 3, 2.5)
    assert np.all(f.values == 2.5)
    assert not f.values.flags.writeable


def test_test1_profile_values():
    g = Grid(30)
    f = sample_profile(g, ic_profiles("test1"))
    omega6 = 1 + 4 * 5 / 9
    assert f.values[5, 0] == pytest.approx(10 + omega6)
    offsets = [10, 10, 8, 10, 6, 10, 10, -5, 10]
    omega = [1 + 4 * i / 9 for i in range(9)]
    assert np.allclose(boundary_trace(f, "right").values[:9],
                       np.array(offsets) - np.array(omega), atol=1e-12)


def test_test2_profile_values():
    f = sample_profile(Grid(30), ic_profiles("test2", 10))
    assert np.allclose(f.values[:, -1], [10 + (i - 4.5) for i in range(1, 11)])


def test_first_derivative_of_square():
    g = Grid(201)
    d = derivative_array(g.nodes**2, g.spacing, 1)
    assert np.abs(d - 2 * g.nodes).max() < 1e-9


def test_second_derivative_second_order():
    errs = []
    for n in (51, 101, 201):
        g = Grid(n)
        x = g.nodes
        d = derivative_array(np.cos(3 * np.pi * x), g.spacing, 2)
        errs.append(np.abs(d + 9 * np.pi**2 * np.cos(3 * np.pi * x)).max())
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.5) & (ratios < 4.5))


def test_derivative_of_constant_is_zero():
    f = constant_field(Grid(11), 2, 7.0)
    assert np.abs(spatial_derivative(f, 1).values).max() < 1e-12
    assert np.abs(spatial_derivative(f, 2).values).max() < 1e-9
    with pytest.raises(GridTooCoarse):
        derivative_array(np.zeros(4), 0.25, 2)


def test_norms():
    g = Grid(301)
    f = sample_profile(g, [TrigProfile(0.0, ((1.0, 1.0, "sin"),))])
    assert h_norm(f, 0) == pytest.approx(np.sqrt(0.5), abs=1e-4)
    c = constant_field(Grid(30), 4, -3.0)
    assert h_norm(c, 0) == pytest.approx(3.0 * 2.0)
    z = constant_field(Grid(30), 4, 0.0)
    assert all(h_norm(z, r) == 0 for r in (0, 1, 2))


def test_boundary_trace():
    f = constant_field(Grid(9), 3, 1.5)
    assert np.all(boundary_trace(f, "left").values == 1.5)
    assert lemma1_residual(constant_field(Grid(9), 3, 0.0), "right") == 0.0


@given(profiles)
def test_exact_integral_matches_quadrature(p):
    g = Grid(2001)
    assert trapezoid(p(g.nodes), g) == pytest.approx(p.integral(), abs=1e-4)


@given(profiles)
def test_slope_matches_difference(p):
    g = Grid(4001)
    d = derivative_array(p(g.nodes), g.spacing, 1)
    assert np.abs(d - p.slope(g.nodes)).max() < 1e-3


@given(st.lists(profiles, min_size=1, max_size=3))
def test_boundary_trace_property(ps):
    f = sample_profile(Grid(101), ps)
    for side in ("left", "right"):
        assert lemma1_residual(f, side) >= -1e-6


scales = st.floats(-100, 100).filter(lambda a: a == 0 or abs(a) > 1e-100)


@given(st.lists(profiles, min_size=1, max_size=3), scales, st.sampled_from([0, 1, 2]))
def test_norm_homogeneous(ps, alpha, r):
    f = sample_profile(Grid(41), ps)
    scaled = f.with_values(alpha * f.values)
    assert h_norm(scaled, r) == pytest.approx(abs(alpha) * h_norm(f, r), rel=1e-12, abs=1e-300)


@given(st.lists(profiles, min_size=1, max_size=3))
def test_norm_monotone_in_order(ps):
    f = sample_profile(Grid(41), ps)
    assert h_norm(f, 0) <= h_norm(f, 1) <= h_norm(f, 2)


# one unit-amplitude mode with wavenumber <= 1 keeps the third derivative below pi^3,
# so the O(h) mismatch next to the one-sided end stencils stays under 10 h
smooth = st.builds(
    TrigProfile, st.floats(-1, 1),
    st.lists(st.tuples(st.floats(-1, 1), st.floats(0, 1), st.sampled_from(["cos", "sin"])),
             max_size=1).map(tuple),
)


@given(st.lists(smooth, min_size=1, max_size=3), st.sampled_from([51, 101, 201]))
def test_first_derivative_twice_matches_second(ps, n):
    g = Grid(n)
    f = sample_profile(g, ps)
    twice = spatial_derivative(spatial_derivative(f, 1), 1).values
    direct = spatial_derivative(f, 2).values
    assert np.abs(twice - direct)[:, 1:-1].max() <= 10 * g.spacing
