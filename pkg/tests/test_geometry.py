import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclab.fractional import make_params
from fraclab.geometry import (
    IndicatorSet,
    boundary_nodes,
    bump_field,
    curvature_blowup_profile,
    disc_set,
    first_variation_P2s,
    flow_set,
    half_space,
    interface_points,
    interval_set,
    make_set,
    mean_curvature_H2s,
    mean_curvature_field,
    perimeter_P2s,
    phase_energy_identity_check,
    prescribed_curvature_residual,
    sharmonic_identity_check,
)
from fraclab.grid import Disc, FarField, Interval, build_grid

H = 2.0**-9


@pytest.fixture(scope="module")
def line_grid():
    return build_grid(1, H, Interval(-1, 1), 8, FarField.sides(-1, 1))


@pytest.fixture(scope="module")
def wide_grid():
    return build_grid(1, H, Interval(-2, 2), 16, -1.0)


def test_half_line_perimeter(line_grid):
    # P_{1/2}((0, inf), (-1, 1)) = 4 sqrt(2)
    P = perimeter_P2s(half_space(line_grid), None, 0.25)
    assert P == pytest.approx(4 * np.sqrt(2), rel=0.03)
    assert P == pytest.approx(5.589552, abs=1e-5)


def test_interval_curvature(wide_grid):
    E = interval_set(wide_grid, -1, 1)
    for x in (-1.0, 1.0):
        assert mean_curvature_H2s(E, x, 0.25) == pytest.approx(2 * np.sqrt(2), rel=0.03)
    field = mean_curvature_field(E, 0.25)
    assert np.allclose(np.sort(field), np.sort([mean_curvature_H2s(E, x, 0.25) for x in wide_grid.points(boundary_nodes(E))[:, 0]]))


def test_half_space_curvature_vanishes(line_grid):
    E = half_space(line_grid)
    for x in line_grid.points(boundary_nodes(E))[:, 0]:
        assert abs(mean_curvature_H2s(E, x, 0.25)) <= 0.02


def test_curvature_dilation_exponent(wide_grid):
    H1 = mean_curvature_H2s(interval_set(wide_grid, -1, 1), 1.0, 0.25)
    H2 = mean_curvature_H2s(interval_set(wide_grid, -2, 2), 2.0, 0.25)
    assert np.log(H2 / H1) / np.log(2) == pytest.approx(-0.5, rel=0.02)


def test_curvature_needs_boundary_node(wide_grid):
    with pytest.raises(ValueError, match="boundary node"):
        mean_curvature_H2s(interval_set(wide_grid, -1, 1), 0.0, 0.25)


@settings(max_examples=10)
@given(st.integers(0, 2**31), st.sampled_from([0.1, 0.25, 0.4]))
def test_phase_energy_identity_random_sets(seed, s):
    rng = np.random.default_rng(seed)
    g = build_grid(1, 1 / 64, Interval(-1, 1), 8, (-1.0, 1.0))
    m = (rng.random(g.shape) < 0.5) & g.interior_mask | (~g.interior_mask & (g.coords[0] > 0))
    E = IndicatorSet(g, m, g.tail)
    assert phase_energy_identity_check(E, make_params(1, s)) <= 1e-10
    # P(E) = P(E^c)
    assert perimeter_P2s(E, None, s) == pytest.approx(perimeter_P2s(E.complement(), None, s), rel=1e-12)


def test_phase_energy_identity_2d():
    rng = np.random.default_rng(7)
    g = build_grid(2, 1 / 32, Disc((0.0, 0.0), 0.5), 4, -1.0)
    E = IndicatorSet(g, (rng.random(g.shape) < 0.4) & g.interior_mask, g.tail)
    assert phase_energy_identity_check(E, make_params(2, 0.3)) <= 1e-10


def test_sharmonic_identity(wide_grid):
    E = interval_set(wide_grid, -0.5, 0.5)
    gap, lhs, rhs = sharmonic_identity_check(E, make_params(1, 0.25))
    assert gap <= 1e-10
    assert lhs.shape == rhs.shape and lhs.size > 100


def test_blowup_profile_bounded(line_grid):
    E = half_space(line_grid)
    p = make_params(1, 0.25)
    pts = np.array([[26.0], [52.0], [103.0], [205.0]]) * H
    dist, prod = curvature_blowup_profile(E, p, pts)
    assert np.allclose(dist, pts[:, 0] - H / 2)
    # |(-Delta)^s v| d^(2s) -> gamma / s for the half-line
    assert np.allclose(prod, p.gamma_ns / p.s, rtol=0.02)


def test_interface_points(line_grid):
    pts = interface_points(half_space(line_grid))
    assert pts.shape == (1, 1) and pts[0, 0] == pytest.approx(H / 2)


def test_make_set_names():
    g = build_grid(2, 1 / 16, Disc((0.0, 0.0), 0.5), 4)
    for name in ("half-space", "disc", "square", "cross", "empty", "full"):
        assert make_set(name, g).membership.shape == g.shape
    with pytest.raises(ValueError, match="unknown set name"):
        make_set("blob", g)
    with pytest.raises(ValueError, match="membership"):
        IndicatorSet(g, np.full(g.shape, 2), g.tail)


def test_flow_identity_and_translation():
    g = build_grid(1, 1 / 128, Interval(-1, 1), 8, FarField.sides(-1, 1))
    E = half_space(g)
    X = bump_field(g, (0.0,), 0.5, (1.0,))
    assert np.array_equal(flow_set(E, X, 0.0).membership, E.membership)
    moved = flow_set(E, X, 4 * g.h)
    assert moved.membership.sum() == E.membership.sum() - 4


def test_first_variation():
    g = build_grid(1, 1 / 256, Interval(-1, 1), 8, FarField.sides(-1, 1))
    p = make_params(1, 0.25)
    X = bump_field(g, (0.1,), 0.4, (1.0,))
    assert abs(first_variation_P2s(half_space(g), X, p.s)) < 1e-10
    gi = build_grid(1, 1 / 256, Interval(-1, 1), 8, -1.0)
    Ei = interval_set(gi, -0.5, 0.5)
    Xi = bump_field(gi, (0.5,), 0.3, (1.0,))
    res, _ = prescribed_curvature_residual(Ei, p, [Xi])
    assert res > 1.0
    with pytest.raises(ValueError, match="support"):
        first_variation_P2s(Ei, bump_field(gi, (0.9,), 0.3, (1.0,)), p.s)


def test_disc_not_stationary():
    g = build_grid(2, 1 / 32, Disc((0.0, 0.0), 0.5), 4, -1.0)
    p = make_params(2, 0.25)
    D = disc_set(g, (0.0, 0.0), 0.25)
    res, _ = prescribed_curvature_residual(D, p, [bump_field(g, (0.25, 0.0), 0.15, (1.0, 0.0))])
    assert res > 1.0
