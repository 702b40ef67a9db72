import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from membrane_orbits.membrane import (Heterogeneity, LoadSet, MembraneModel, free_profile,
                                      free_profile_slope, heterogeneity_factor, sample,
                                      terrain_gradient, vehicle_heights)

CAPPED = MembraneModel(R0=0.05, D=0.139)
FREE = MembraneModel()


def _free_oracle(model, r):
    # solve the two boundary conditions for (c1, c2) directly
    R, R0, lam, D = model.R, model.R0, model.lam, model.D
    A = np.array([[np.log(R), 1.0], [np.log(R0), 1.0]])
    b = np.array([-R * R / (4 * lam), -D - R0 * R0 / (4 * lam)])
    c1, c2 = np.linalg.solve(A, b)
    return r * r / (4 * lam) + c1 * np.log(r) + c2


def test_free_profile_boundaries_and_value():
    assert free_profile(CAPPED, 1.2) == pytest.approx(0.0, abs=1e-15)
    assert free_profile(CAPPED, 0.05) == pytest.approx(-0.139, abs=1e-14)
    assert free_profile(CAPPED, 0.6) == pytest.approx(-0.0598, abs=5e-5)
    r = np.linspace(0.05, 1.2, 50)
    assert np.allclose(free_profile(CAPPED, r), _free_oracle(CAPPED, r), atol=1e-14)


def test_free_profile_slope_matches_fd():
    r = np.linspace(0.1, 1.1, 11)
    h = 1e-6
    fd = (free_profile(CAPPED, r + h) - free_profile(CAPPED, r - h)) / (2 * h)
    assert np.allclose(free_profile_slope(CAPPED, r), fd, rtol=1e-7)


def test_free_profile_errors():
    with pytest.raises(ValueError):
        free_profile(CAPPED, 1.3)
    with pytest.raises(ValueError):
        free_profile(FREE, 0.5)


def test_model_validation():
    for kw in (dict(R=0), dict(R0=1.3), dict(lam=-1), dict(heterogeneity_amp=1.0), dict(D=-1)):
        with pytest.raises(ValueError):
            MembraneModel(**kw)


def test_zero_mass_limit():
    loads = LoadSet([[0.6, 0.0]], [1e-12])
    z = vehicle_heights(FREE, loads)[0]
    assert z == pytest.approx((0.36 - 1.44) / (4 * 6.5), rel=1e-9)


def test_mirror_loads_equal_heights():
    loads = LoadSet([[0.3, 0.4], [0.3, -0.4]], [0.16, 0.16])
    z = vehicle_heights(FREE, loads)
    assert z[0] == pytest.approx(z[1], rel=1e-14)


def test_single_load_gradients():
    g0 = terrain_gradient(FREE, LoadSet([[0.0, 0.0]], [0.16]), 0)
    assert np.allclose(g0, 0.0, atol=1e-15)
    g = terrain_gradient(FREE, LoadSet([[0.6, 0.0]], [0.16]), 0)
    assert g[0] < 0 and g[1] == 0.0


def test_load_outside_disk_rejected():
    with pytest.raises(ValueError):
        vehicle_heights(FREE, LoadSet([[1.3, 0.0]], [0.16]))
    with pytest.raises(ValueError):
        vehicle_heights(CAPPED, LoadSet([[0.3, 0.0]], [0.16]))


def _fd_gradient(model, pos, m, rv, i, h=1e-6):
    out = np.zeros(2)
    for a in range(2):
        p, q = pos.copy(), pos.copy()
        p[i, a] += h
        q[i, a] -= h
        out[a] = (vehicle_heights(model, LoadSet(p, m, rv))[i]
                  - vehicle_heights(model, LoadSet(q, m, rv))[i]) / (2 * h)
    return out


configs = st.lists(st.tuples(st.floats(0.05, 0.9), st.floats(-np.pi, np.pi),
                             st.floats(0.05, 0.4)), min_size=1, max_size=4)


def _positions(cfg):
    pos = np.array([[r * np.cos(p), r * np.sin(p)] for r, p, _ in cfg])
    m = np.array([c[2] for c in cfg])
    return pos, m


def _separated(pos, d=0.1):
    n = len(pos)
    return all(np.hypot(*(pos[i] - pos[j])) > d for i in range(n) for j in range(i + 1, n))


@settings(max_examples=60, deadline=None)
@given(configs)
def test_gradient_matches_finite_differences(cfg):
    pos, m = _positions(cfg)
    if not _separated(pos):
        return
    g = -terrain_gradient(FREE, LoadSet(pos, m))
    for i in range(len(m)):
        fd = _fd_gradient(FREE, pos, m, 0.05, i)
        assert np.linalg.norm(g[i] - fd) <= 1e-6 * np.linalg.norm(fd) + 1e-9


@settings(max_examples=40, deadline=None)
@given(configs, st.floats(0.01, 0.1))
def test_gradient_independent_of_vehicle_radius(cfg, rv):
    pos, m = _positions(cfg)
    if not _separated(pos):
        return
    a = terrain_gradient(FREE, LoadSet(pos, m, 0.05))
    b = terrain_gradient(FREE, LoadSet(pos, m, rv))
    assert np.array_equal(a, b)


@settings(max_examples=40, deadline=None)
@given(configs, st.floats(-np.pi, np.pi))
def test_rotational_equivariance(cfg, beta):
    pos, m = _positions(cfg)
    if not _separated(pos):
        return
    Rm = np.array([[np.cos(beta), -np.sin(beta)], [np.sin(beta), np.cos(beta)]])
    z0 = vehicle_heights(FREE, LoadSet(pos, m))
    z1 = vehicle_heights(FREE, LoadSet(pos @ Rm.T, m))
    assert np.allclose(z0, z1, rtol=1e-11, atol=1e-14)
    g0 = terrain_gradient(FREE, LoadSet(pos, m))
    g1 = terrain_gradient(FREE, LoadSet(pos @ Rm.T, m))
    assert np.allclose(g0 @ Rm.T, g1, rtol=1e-9, atol=1e-12)


def _green(R, a, b):
    # Dirichlet Green's function of the disk, independent image construction
    rb = np.hypot(*b)
    img = b * (R / rb) ** 2
    return np.log(np.hypot(*(a - b)) * R / (rb * np.hypot(*(a - img))))


def test_superposition():
    pa, pb = np.array([0.4, 0.1]), np.array([-0.2, 0.5])
    ma, mb = 0.16, 0.22
    za = vehicle_heights(FREE, LoadSet([pa], [ma]))[0]
    zab = vehicle_heights(FREE, LoadSet([pa, pb], [ma, mb]))[0]
    expected = mb / FREE.sigma * _green(FREE.R, pa, pb) / (2 * np.pi * FREE.lam)
    assert zab - za == pytest.approx(expected, rel=1e-12)


def test_center_source_special_form():
    z = vehicle_heights(FREE, LoadSet([[0.0, 0.0], [0.5, 0.0]], [0.16, 0.16]))
    z_near = vehicle_heights(FREE, LoadSet([[1e-5, 0.0], [0.5, 0.0]], [0.16, 0.16]))
    assert np.allclose(z, z_near, atol=1e-8)


def test_sample():
    loads = LoadSet([[0.4, 0.0], [0.0, 0.5]], [0.16, 0.2])
    smp = sample(FREE, loads, 1)
    assert smp.height == vehicle_heights(FREE, loads)[1]
    assert np.array_equal(smp.gradient, -terrain_gradient(FREE, loads, 1))


def test_heterogeneity_zero_amplitude():
    assert heterogeneity_factor(FREE, 17) == 1.0
    assert np.all(Heterogeneity(0.0).factor(np.arange(10)) == 1.0)


@pytest.mark.parametrize("amp", [0.05, 0.20])
def test_heterogeneity_range_and_reproducibility(amp):
    h = Heterogeneity(amp, seed=3)
    draws = h.factor(np.arange(10_000))
    assert draws.min() >= 1 - amp and draws.max() <= 1 + amp
    assert draws.min() < 1 - 0.9 * amp and draws.max() > 1 + 0.9 * amp
    again = Heterogeneity(amp, seed=3)
    # order of queries does not matter
    assert np.array_equal(again.factor(np.arange(10_000)[::-1])[::-1], draws)
    assert not np.array_equal(Heterogeneity(amp, seed=4).factor(np.arange(100)), draws[:100])
    assert not np.array_equal(h.factor(np.arange(100), stream=1), draws[:100])
