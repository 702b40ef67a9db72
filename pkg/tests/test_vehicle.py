import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from membrane_orbits.vehicle import (HEAVY, LIGHT, PhysState, VehicleParams, accel_axisymmetric,
                                     accel_general, bias_accel, bias_term, envelope_half_life,
                                     k_of_gamma, k_of_slope, mechanical_constant)


def test_mechanical_constant_heavy():
    # Lc^2 / (Lc^2 + Rv^2 / 2) with Lc = 1 cm, Rv = 5 cm
    assert mechanical_constant(HEAVY) == pytest.approx(1e-4 / (1e-4 + 0.5 * 0.05 ** 2), rel=1e-14)
    assert abs(HEAVY.C - 0.0741) < 1e-4


def test_epsilon_and_half_life():
    p = HEAVY.with_(dB=0.006)
    assert p.epsilon == pytest.approx(0.01 * 0.006 / (0.5 * 0.05 ** 2 + 1e-4 + 0.006 ** 2))
    assert abs(p.epsilon - 0.0433) < 1e-4
    assert envelope_half_life(p.epsilon) == pytest.approx(32.0, abs=0.1)
    assert HEAVY.epsilon == 0.0
    assert HEAVY.with_(dB=-0.006).epsilon == pytest.approx(-p.epsilon)


def test_k_of_gamma_values():
    p = HEAVY
    assert k_of_gamma(p, 0.0) == 0.0
    g = np.radians(10.0)
    assert k_of_gamma(p, g) == pytest.approx(p.C * 9.8 * np.sin(g) * np.cos(g))
    # with C rounded to 0.074 the formula gives 0.12402 m/s^2
    assert 0.074 * 9.8 * np.sin(g) * np.cos(g) == pytest.approx(0.12402, abs=1e-5)
    # small-angle slope form agrees to second order
    assert k_of_slope(p, np.tan(1e-3)) == pytest.approx(k_of_gamma(p, 1e-3), rel=1e-5)
    with pytest.raises(ValueError):
        k_of_gamma(p, np.pi / 2)


def test_bias_accel():
    p = HEAVY.with_(dB=0.006)
    assert bias_accel(p, np.radians(10), 0.0) == pytest.approx(0.0738, abs=5e-4)
    assert bias_accel(p, np.radians(10), np.pi / 2) == pytest.approx(0.0, abs=1e-15)
    assert bias_accel(HEAVY, np.radians(10), 0.0) == 0.0
    assert bias_term(0.2, 0.0, p.epsilon) == pytest.approx(0.2 * p.epsilon)


def test_param_validation():
    with pytest.raises(ValueError):
        VehicleParams(mass=0)
    with pytest.raises(ValueError):
        VehicleParams(dB=0.06)
    assert LIGHT.Rv == 0.02 and LIGHT.mass == 0.045


def test_polar_roundtrip():
    s = PhysState.from_polar(0.5, 0.3, np.radians(70), 0.25)
    assert s.r == pytest.approx(0.5)
    assert s.phi == pytest.approx(0.3)
    assert s.theta == pytest.approx(np.radians(70))
    assert s.speed == pytest.approx(0.25)
    r, phi, rd, pd = s.polar()
    assert rd == pytest.approx(0.25 * np.cos(np.radians(70)))
    assert pd == pytest.approx(0.25 * np.sin(np.radians(70)) / 0.5)


def test_axisymmetric_accel_errors():
    with pytest.raises(ValueError):
        accel_axisymmetric(PhysState([0, 0], [0.1, 0]), 0.1)
    with pytest.raises(ValueError):
        accel_axisymmetric(PhysState([0.1, 0], [0, 0]), 0.1)


states = st.tuples(st.floats(0.05, 1.1), st.floats(-np.pi, np.pi), st.floats(-3.1, 3.1),
                   st.floats(0.05, 0.4))


@settings(max_examples=200, deadline=None)
@given(states, st.floats(0.0, 0.2))
def test_accel_perpendicular_to_velocity(s, slope):
    r, phi, th, v = s
    st_ = PhysState.from_polar(r, phi, th, v)
    grad = slope * st_.position / r
    a = accel_general(st_, grad, HEAVY)
    assert abs(a @ st_.velocity) <= 1e-12 * max(1.0, np.linalg.norm(a))


@settings(max_examples=200, deadline=None)
@given(states, st.floats(0.0, 0.2))
def test_general_reduces_to_axisymmetric(s, slope):
    r, phi, th, v = s
    st_ = PhysState.from_polar(r, phi, th, v)
    k = HEAVY.C * HEAVY.g * slope
    ar, aphi = accel_axisymmetric(st_, k)
    a = accel_general(st_, slope * st_.position / r, HEAVY)
    er = st_.position / r
    ephi = np.array([-er[1], er[0]])
    assert a @ er == pytest.approx(ar, abs=1e-12)
    assert a @ ephi / r == pytest.approx(aphi, abs=1e-12)
    # magnitude law |a| = k |sin(theta)|
    assert np.linalg.norm(a) == pytest.approx(k * abs(np.sin(th)), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(states, st.floats(0.0, 0.2))
def test_mirror_symmetry(s, slope):
    r, phi, th, v = s
    a = PhysState.from_polar(r, 0.0, th, v)
    b = PhysState.from_polar(r, 0.0, -th, v)
    ga = slope * a.position / r
    aa, ab = accel_general(a, ga, HEAVY), accel_general(b, ga, HEAVY)
    assert aa[0] == pytest.approx(ab[0], abs=1e-14)
    assert aa[1] == pytest.approx(-ab[1], abs=1e-14)


def test_downhill_turn():
    # heading tangentially counterclockwise around a central depression turns inward
    s = PhysState.from_polar(0.6, 0.0, np.pi / 2, 0.3)
    a = accel_general(s, np.array([0.1, 0.0]), HEAVY)
    assert a[0] < 0 and abs(a[1]) < 1e-15
