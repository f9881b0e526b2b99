import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from landing_guidance.errors import ConfigurationError, DomainError
from landing_guidance.guidance import GuidanceConfig, divert_rate
from landing_guidance.terrain import (StepTerrain, barrier_distance, build_barriers,
                                      critical_distance, ground_height, horizontal_barrier,
                                      vertical_barrier)


def test_first_barrier_coefficients(site_barriers):
    b = site_barriers
    assert b.alpha[0, 0] == 0 and b.gamma[0, 0] == 0
    assert b.beta[0, 0] == pytest.approx(600 / 500 ** (1 / 20), rel=1e-12)
    assert b.beta[0, 0] == pytest.approx(439.75, abs=0.01)
    assert b.beta[0, -1] == pytest.approx(1 / math.tan(math.radians(0.05)), rel=1e-12)


def test_values_at_knots(site_barriers):
    assert horizontal_barrier(site_barriers, 0, 1, 0.0) == 0.0
    assert horizontal_barrier(site_barriers, 0, 1, 500.0) == pytest.approx(600.0, rel=1e-12)
    assert horizontal_barrier(site_barriers, 1, 1, 1000.0) == pytest.approx(1000.0, rel=1e-12)


def test_linear_branch_above_top_step(site_barriers):
    cot = 1 / math.tan(math.radians(0.05))
    assert horizontal_barrier(site_barriers, 0, 1, 1200.0) == pytest.approx(1000 + cot * 200,
                                                                           rel=1e-12)


def test_junction_continuity_site(site_barriers):
    b = site_barriers
    # evaluate barrier 2 directly at h_1
    rho2 = b.beta[0, 1] * (500.0 + b.gamma[0, 1]) ** (1 / b.lam[0, 1]) + b.alpha[0, 1]
    assert rho2 == pytest.approx(600.0, abs=1e-9 * 1000)


def test_single_step_starts_at_origin():
    b = build_barriers(StepTerrain((300.0,), (450.0,), (4,)), 10.0)
    assert horizontal_barrier(b, 0, 1, 0.0) == 0.0


def test_negative_altitude_is_a_domain_error(site_barriers):
    with pytest.raises(DomainError):
        horizontal_barrier(site_barriers, 0, 1, -1.0)


@pytest.mark.parametrize("kw, key", [
    (dict(heights=(500.0, 400.0), half_widths=(600.0, 1000.0), lambdas=(20, 6)), "terrain.heights_m"),
    (dict(heights=(500.0, 1000.0), half_widths=(600.0, 600.0), lambdas=(20, 6)), "terrain.half_widths_m"),
    (dict(heights=(500.0, 1000.0), half_widths=(600.0, 1000.0), lambdas=(20, 5)), "terrain.lambdas"),
    (dict(heights=(500.0,), half_widths=(600.0,), lambdas=(2,), theta_deg=90.0), "terrain.theta_deg"),
])
def test_invalid_terrain(kw, key):
    with pytest.raises(ConfigurationError) as exc:
        StepTerrain(**kw)
    assert exc.value.key == key


def test_delta_must_be_positive(site_terrain):
    with pytest.raises(ConfigurationError):
        build_barriers(site_terrain, 0.0)


# literal case table: altitude band first, then lateral band
@pytest.mark.parametrize("pos, expected", [
    ((700.0, 0.0, 800.0), 595.5),
    ((0.0, 0.0, 1500.0), 1095.5),
    ((100.0, 50.0, 200.0), 95.5),
    ((1500.0, 0.0, 300.0), 95.5),     # outside every band below h_n: fallback
])
def test_vertical_barrier_altitude_rule(literal_barriers, pos, expected):
    assert vertical_barrier(literal_barriers, pos) == pytest.approx(expected)


# default rule: the barrier sits delta above the ground directly underneath
@pytest.mark.parametrize("pos, expected", [
    ((700.0, 0.0, 800.0), 595.5),
    ((0.0, 0.0, 1500.0), 95.5),
    ((100.0, 50.0, 200.0), 95.5),
    ((-1500.0, 0.0, 3000.0), 1095.5),
    ((10.0, 800.0, 2000.0), 595.5),
])
def test_vertical_barrier_lateral_rule(site_barriers, pos, expected):
    assert vertical_barrier(site_barriers, pos) == pytest.approx(expected)


def test_barrier_distance_examples(site_barriers, literal_barriers):
    assert barrier_distance(literal_barriers, (0.0, 0.0, 1500.0))[2] == pytest.approx(404.5)
    rho = float(horizontal_barrier(site_barriers, 0, 1, 300.0))
    assert barrier_distance(site_barriers, (rho, 0.0, 300.0))[0] == pytest.approx(0.0, abs=1e-9)


def test_ground_height(site_barriers):
    pts = np.array([[0, 0, 0], [600, 0, 0], [600.1, 0, 0], [0, -999, 0], [0, 1001, 0],
                    [700, 1200, 0]], float)
    assert ground_height(site_barriers, pts).tolist() == [0, 0, 500, 500, 1000, 1000]


def test_critical_distance_values():
    assert critical_distance(1.0, 9500.0) == pytest.approx(79.58, abs=0.01)
    assert 1.2 * critical_distance(1.0, 9500.0) == pytest.approx(95.5, abs=0.05)
    with pytest.raises(ConfigurationError):
        critical_distance(0.0, 9500.0)


# ---------------------------------------------------------------- properties

@st.composite
def terrains(draw):
    n = draw(st.integers(1, 4))
    dh = draw(st.lists(st.floats(10, 2000), min_size=n, max_size=n))
    dw = draw(st.lists(st.floats(10, 2000), min_size=n, max_size=n))
    lams = draw(st.lists(st.sampled_from([2, 4, 6, 8, 20]), min_size=n, max_size=n))
    theta = draw(st.floats(0.01, 89.0))
    return StepTerrain(tuple(np.cumsum(dh)), tuple(np.cumsum(dw)), tuple(lams), theta)


@given(terrains())
def test_junction_continuity(ter):
    b = build_barriers(ter, 50.0)
    wn = b.widths[0, -1]
    for j in range(1, b.n + 1):
        hj = b.heights[0, j]
        lo = b.beta[0, j - 1] * (hj + b.gamma[0, j - 1]) ** (1 / b.lam[0, j - 1]) + b.alpha[0, j - 1]
        hi = b.beta[0, j] * (hj + b.gamma[0, j]) ** (1 / b.lam[0, j]) + b.alpha[0, j]
        assert abs(lo - hi) < 1e-9 * wn
        assert abs(lo - b.widths[0, j]) < 1e-9 * wn


@given(terrains())
def test_barrier_monotone_and_mirrored(ter):
    b = build_barriers(ter, 50.0)
    z = np.linspace(0, 1.5 * b.heights[0, -1], 3001)
    rho = horizontal_barrier(b, 0, 1, z)
    assert np.all(np.diff(rho) >= -1e-9 * b.widths[0, -1])
    np.testing.assert_array_equal(horizontal_barrier(b, 0, -1, z), -rho)


def _case_table_brute(h, w, delta, pos):
    x, y, z = pos
    lat = max(abs(x), abs(y))
    if z >= h[-1]:
        return h[-1] + delta
    for j in range(1, len(h)):
        if h[j - 1] <= z <= h[j] and w[j - 1] <= lat <= w[j]:
            return h[j - 1] + delta
    return delta


@given(terrains(), st.lists(st.floats(-5000, 5000), min_size=3, max_size=3))
def test_altitude_rule_matches_case_table(ter, pos):
    pos[2] = abs(pos[2])
    b = build_barriers(ter, 50.0, vertical_rule="altitude")
    h = [0.0, *ter.heights]
    w = [0.0, *ter.half_widths]
    assert vertical_barrier(b, pos) == pytest.approx(_case_table_brute(h, w, 50.0, pos))


@given(terrains(), st.floats(0, 5000), st.floats(0, 5000))
def test_distance_odd_in_lateral_position(ter, x, z):
    b = build_barriers(ter, 50.0)
    if x == 0:
        return
    d_pos = barrier_distance(b, (x, 0.0, z))
    d_neg = barrier_distance(b, (-x, 0.0, z))
    assert d_neg[0] == pytest.approx(-d_pos[0], rel=1e-12, abs=1e-9)


@given(st.floats(0.1, 10), st.floats(100, 50000))
def test_critical_distance_is_grid_argmax(l1, l2):
    d_star = float(critical_distance(l1, l2))
    cfg = GuidanceConfig(l1=l1, l2=l2)
    d = np.linspace(0, 10 * d_star, 200001)[1:]
    pts = np.zeros((d.size, 3))
    pts[:, 0] = d
    p = divert_rate(pts, cfg)[:, 0]
    step = d[1] - d[0]
    assert abs(d[np.argmax(p)] - d_star) <= step
