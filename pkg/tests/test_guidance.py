import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from landing_guidance.dynamics import Environment, LanderState, dynamics_step
from landing_guidance.errors import ConfigurationError
from landing_guidance.guidance import (GuidanceConfig, divert_rate, divert_term, guidance_command,
                                       law_tag, mss_command, mss_otalg_accel, ogl_accel,
                                       otalg_accel, s1_closed_form, sat, sliding_parameter,
                                       sliding_surfaces, zem_zev)
from landing_guidance.terrain import critical_distance

G = np.array([0.0, 0.0, -3.7114])
CFG = GuidanceConfig()
vec3 = st.lists(st.floats(-3000, 3000), min_size=3, max_size=3).map(np.array)
tgo = st.floats(0.1, 100.0)


def test_zem_zev_example():
    s = LanderState((0, 0, 100.0), (0, 0, -10.0), 1905.0)
    zem, zev = zem_zev(s, CFG, G, 10.0)
    assert zem[2] == pytest.approx(185.57, abs=1e-9)
    assert zev[2] == pytest.approx(47.114, abs=1e-9)
    z0 = zem_zev(LanderState(np.zeros(3), np.zeros(3), 1.0), CFG, np.zeros(3), 5.0)
    assert not np.any(z0[0]) and not np.any(z0[1])


def test_ogl_example():
    a = ogl_accel(np.array([0, 0, 185.57]), np.array([0, 0, 47.114]), 10.0)
    assert a[2] == pytest.approx(11.1342 - 9.4228, abs=1e-9)
    assert a[2] == pytest.approx(1.7114, abs=1e-9)


def test_divert_rate_peak():
    d_star = float(critical_distance(1.0, 9500.0))
    p = divert_rate(np.full(3, d_star), CFG)
    assert p[0] == pytest.approx(2.10, abs=0.01)
    assert divert_rate(np.zeros(3), CFG).tolist() == [0, 0, 0]


def test_otalg_divert_contribution():
    zero = np.zeros(3)
    a = otalg_accel(zero, zero, np.array([0, 0, 2.10]), 40.0)
    assert a[2] == pytest.approx(280.0, rel=1e-12)
    np.testing.assert_array_equal(otalg_accel([1, 2, 3], [4, 5, 6], zero, 7.0),
                                  ogl_accel([1, 2, 3], [4, 5, 6], 7.0))
    assert divert_term(2.1, 1e-4) < 1e-8


def test_sliding_surface_examples():
    cfg = GuidanceConfig(Lambda=2.0)
    s1, s2 = sliding_surfaces(LanderState((100.0, 0, 0), (-10.0, 0, 0), 1.0), cfg, 20.0)
    assert s1[0] == 100.0 and s2[0] == 0.0
    s1, s2 = sliding_surfaces(LanderState(np.zeros(3), np.zeros(3), 1.0), cfg, 20.0)
    assert not np.any(s1) and not np.any(s2)


def test_sliding_parameter_examples():
    cfg = GuidanceConfig(k1=0.8, k2=0.2, a_p_max=5.0)
    assert sliding_parameter(1.2, 10.0, cfg) == pytest.approx(9.0, rel=1e-12)
    assert sliding_parameter(0.0, 37.0, cfg) == pytest.approx(1.0, rel=1e-12)


def test_sat_and_sign_examples():
    assert sat(0.05, 0.1) == pytest.approx(0.5)
    assert sat(5, 0.1) == 1 and sat(-5, 0.1) == -1 and sat(0, 0.1) == 0
    assert [np.sign(-3), np.sign(0), np.sign(2)] == [-1, 0, 1]


def test_mss_far_from_terrain_on_surface():
    # on s2 = 0 with negligible divert, the command is the gravity-free OGL command minus g
    cfg = GuidanceConfig(a_p_max=0.0)
    r = np.array([200.0, -100.0, 400.0])
    t = 30.0
    s = LanderState(r, -2.0 / t * r, 1905.0)
    out = mss_otalg_accel(s, np.full(3, 1e6), cfg, G, t)
    zem, zev = zem_zev(s, cfg, np.zeros(3), t)
    np.testing.assert_allclose(out.a_cmd, ogl_accel(zem, zev, t) - G, atol=1e-6)
    assert out.law == "MSS_OTALG"


def test_mss_switching_saturates_outside_boundary_layer():
    cfg = GuidanceConfig()
    s = LanderState((100.0, 0.0, 500.0), (30.0, -30.0, 0.0), 1905.0)
    d = np.array([150.0, 150.0, 300.0])
    out = mss_otalg_accel(s, d, cfg, G, 20.0)
    assert np.all(np.abs(out.s2) >= cfg.eps_boundary)
    zem, zev = zem_zev(s, cfg, np.zeros(3), 20.0)
    expected = otalg_accel(zem, zev, out.p, 20.0) - out.phi * np.sign(out.s2) - G
    np.testing.assert_allclose(out.a_cmd, expected, rtol=1e-14)


def test_ogl_output_has_no_divert(nominal_ogl):
    assert not np.any(nominal_ogl.p) and not np.any(nominal_ogl.phi)
    out = guidance_command("ogl", LanderState((1, 2, 3), (0, 0, 0), 1.0), np.ones(3), CFG, G, 5.0)
    assert out.law == "OGL" and not np.any(out.p) and not np.any(out.phi)


def test_config_validation():
    with pytest.raises(ConfigurationError) as exc:
        GuidanceConfig(l1=0)
    assert exc.value.key == "guidance.l1" and "l1 > 0" in str(exc.value)
    with pytest.warns(UserWarning):
        GuidanceConfig(Lambda=2.5)
    with pytest.raises(ConfigurationError):
        law_tag("aug-osg")
    assert law_tag("mss-otalg") == "MSS_OTALG"


# ---------------------------------------------------------------- properties

@pytest.mark.parametrize("Lambda", [2.0, 3.0])
def test_s1_closed_form_matches_integration(Lambda):
    t_f, s0 = 100.0, np.array([1051.86, -562.15, 2459.07])
    t_end = 99.0
    sol = solve_ivp(lambda t, y: -(Lambda / (t_f - t)) * y, (0, t_end), s0, rtol=1e-12,
                    atol=1e-12, dense_output=True)
    for t in np.linspace(0, t_end, 34):
        exact = s1_closed_form(s0, t_f - t, t_f, Lambda)
        num = sol.sol(t)
        assert np.max(np.abs(num - exact) / np.abs(exact)) < 1e-6


@given(vec3, vec3, tgo)
def test_zem_equals_ballistic_miss(r, v, t):
    env = Environment()
    s = LanderState(r, v, 1000.0)
    zem, zev = zem_zev(s, CFG, env.g_vec, t)
    n = 20
    end = s
    for _ in range(n):
        end = dynamics_step(end, np.zeros(3), np.zeros(3), env, t / n)
    miss = -end.r
    scale = np.maximum(np.abs(miss), 1.0)
    assert np.all(np.abs(zem - miss) <= 1e-9 * scale)
    assert np.all(np.abs(zev + end.v) <= 1e-9 * np.maximum(np.abs(end.v), 1.0))


@given(vec3, vec3, tgo)
def test_reduction_to_ogl(r, v, t):
    # with p = 0 and phi = 0 the sliding-mode command plus g is the OGL command
    s = LanderState(r, v, 1000.0)
    zem, zev = zem_zev(s, CFG, np.zeros(3), t)
    _, s2 = sliding_surfaces(s, CFG, t)
    a = mss_command(otalg_accel(zem, zev, np.zeros(3), t), np.zeros(3), s2, 0.1, G)
    np.testing.assert_allclose(a + G, ogl_accel(zem, zev, t), rtol=1e-13, atol=1e-12)


@given(vec3)
def test_odd_and_sign_invariant(d):
    np.testing.assert_array_equal(divert_rate(-d, CFG), -divert_rate(d, CFG))
    np.testing.assert_array_equal(sat(-d, 0.1), -sat(d, 0.1))
    p = divert_rate(d, CFG)
    np.testing.assert_array_equal(sliding_parameter(p, 20.0, CFG),
                                  sliding_parameter(-p, 20.0, CFG))


@given(vec3, tgo, st.floats(0, 10))
def test_phi_dominates_disturbance_with_unit_gains(d, t, a_p_max):
    cfg = GuidanceConfig(k1=1.0, k2=1.0, a_p_max=a_p_max)
    p = divert_rate(d, cfg)
    phi = sliding_parameter(p, t, cfg)
    for a_p in (a_p_max, -a_p_max, 0.0):
        assert np.all(phi >= np.abs(p * t**2 / 12 + a_p) - 1e-12)
