import numpy as np
import pytest
from scipy.integrate import quad

from membrane_orbits.spacetime import (DomainError, MetricDomainError, NoBoundOrbit,
                                       NoCircularOrbit, RadialProfile, UnstableCircularOrbit,
                                       build_metric_axisym, build_metric_general,
                                       circular_radius, conserved, effective_potential,
                                       ell_launch, ell_max, load_bundled, orbit_shape,
                                       precession_exact, precession_linear,
                                       precession_perturbative, turning_points)
from membrane_orbits.spacetime.polar import rhs_geodesic, rhs_physical
from membrane_orbits.vehicle import HEAVY, PhysState

SPEEDS = {"D13.9": 0.309, "D9.6": 0.286, "D5.3": 0.295, "light_D17": 0.25}


@pytest.fixture(scope="module")
def d139():
    prof = load_bundled("D13.9")
    return prof, build_metric_axisym(prof, 0.309)


def test_flat_metric():
    m = build_metric_axisym(RadialProfile.constant(0.0), 0.3)
    r = np.linspace(0.1, 1.1, 20)
    assert np.allclose(m.alpha2(r), 1 - 0.09)
    assert np.allclose(m.Phi2(r), m.alpha2(r))


def test_ratio_identity(d139):
    _, m = d139
    r = np.linspace(0.1, 1.1, 1000)
    assert np.allclose(m.Phi2(r) / m.alpha2(r), np.exp(-m.K(r) / 0.309 ** 2), rtol=1e-13)


def test_superluminal_rejected():
    with pytest.raises(MetricDomainError):
        build_metric_axisym(RadialProfile.constant(0.0), 1.05)


def test_general_matches_axisymmetric(d139):
    prof, m = d139
    cg = HEAVY.C * HEAVY.g
    z = lambda x, y: prof.integral(np.hypot(x, y)) / cg
    gm = build_metric_general(z, HEAVY.C, HEAVY.g, 0.309)
    rng = np.random.default_rng(1)
    r, ph = rng.uniform(0.1, 1.1, 200), rng.uniform(-np.pi, np.pi, 200)
    x, y = r * np.cos(ph), r * np.sin(ph)
    assert np.max(np.abs(gm.alpha2(x, y) - m.alpha2(r))) < 1e-12
    assert np.max(np.abs(gm.Phi2(x, y) - m.Phi2(r))) < 1e-12
    flat = build_metric_general(lambda x, y: 0.0 * x, HEAVY.C, HEAVY.g, 0.3)
    assert np.allclose(flat.alpha2(x, y), flat.Phi2(x, y))


def test_time_condition_static_and_linear():
    gm = build_metric_general(lambda x, y: x, HEAVY.C, HEAVY.g, 0.2)
    assert gm.time_condition(-0.05, 0.0)[2] == 0.0
    a = gm.time_condition(-0.05, 1e-3)
    b = gm.time_condition(-0.05, 2e-3)
    assert np.allclose(np.array(b), 2 * np.array(a), rtol=1e-14)


def test_circular_radius(d139):
    prof, _ = d139
    rc = circular_radius(prof, 0.309)
    assert abs(rc - 0.60) <= 0.01
    assert prof(rc) == pytest.approx(0.309 ** 2 / rc, rel=1e-9)
    assert prof(rc) == pytest.approx(0.159, abs=1e-3)
    assert circular_radius(RadialProfile.constant(0.3 ** 2 / 0.45), 0.3) == pytest.approx(0.45)
    with pytest.raises(NoCircularOrbit):
        circular_radius(RadialProfile.constant(1e-4), 0.3)


def test_ell_at_launch(d139):
    prof, m = d139
    r0 = 0.5
    s = PhysState.from_polar(r0, 0.2, np.pi / 2, 0.309)
    c = conserved(m, s)
    assert c.ell == pytest.approx(0.309 * r0 * np.exp(-prof.integral(r0) / 0.309 ** 2))
    assert c.ell == pytest.approx(ell_launch(m, r0))
    assert conserved(m, PhysState.from_polar(r0, 0.0, 0.0, 0.309)).ell == 0.0
    # ell at a 90 degree launch peaks at r_c
    rc = circular_radius(prof, 0.309)
    assert ell_launch(m, rc + 0.01) < ell_launch(m, rc) > ell_launch(m, rc - 0.01)
    assert ell_launch(m, rc) == pytest.approx(ell_max(m, rc))


def test_effective_potential(d139):
    prof, m = d139
    rc = circular_radius(prof, 0.309)
    ell = ell_launch(m, 0.45)
    rm, rp = turning_points(m, ell, rc)
    assert effective_potential(m, ell, rm) == pytest.approx(0.5, abs=1e-12)
    assert effective_potential(m, ell, rp) == pytest.approx(0.5, abs=1e-12)
    assert rm == pytest.approx(0.45, abs=1e-9)
    # circular limit: minimum of V touches 1/2 at r_c
    lm = ell_max(m, rc)
    r = np.linspace(0.3, 0.9, 6001)
    V = effective_potential(m, lm, r)
    assert r[np.argmin(V)] == pytest.approx(rc, abs=2e-4)
    assert V.min() == pytest.approx(0.5, abs=1e-10)
    V0 = effective_potential(m, 0.0, r)
    assert np.all(np.diff(V0) > 0)
    with pytest.raises(NoBoundOrbit):
        turning_points(m, lm * 1.001, rc)


def _oracle_precession(prof, v, ell):
    """Azimuth per radial cycle from dphi/dr, integrated by adaptive quadrature."""
    w = lambda r: np.exp(-prof.integral(r) / v ** 2)
    g = lambda r: r * v * w(r) - ell
    from scipy.optimize import brentq
    rc = circular_radius(prof, v)
    rm, rp = brentq(g, prof.lo, rc, xtol=1e-14), brentq(g, rc, prof.hi, xtol=1e-14)
    mid, half = 0.5 * (rp + rm), 0.5 * (rp - rm)

    def integrand(chi):
        r = mid - half * np.cos(chi)
        pd = ell / (w(r) * r * r)
        rd2 = v * v - (r * pd) ** 2
        return pd / np.sqrt(max(rd2, 1e-300)) * half * np.sin(chi)

    knots = prof.pp.x[(prof.pp.x > rm) & (prof.pp.x < rp)]
    pts = np.arccos((mid - knots) / half)
    val, _ = quad(integrand, 0, np.pi, points=pts, limit=400, epsabs=1e-10, epsrel=1e-10)
    return 2 * val - 2 * np.pi


@pytest.mark.parametrize("name", list(SPEEDS))
def test_precession_exact_vs_quadrature_oracle(name):
    prof, v = load_bundled(name), SPEEDS[name]
    m = build_metric_axisym(prof, v)
    rc = circular_radius(prof, v)
    for r0 in (0.8 * rc, 0.9 * rc):
        ell = ell_launch(m, r0)
        assert precession_exact(m, ell, rc) == pytest.approx(
            _oracle_precession(prof, v, ell), abs=1e-7)


@pytest.mark.parametrize("name", list(SPEEDS))
def test_sign_law_and_circular_limit(name):
    prof, v = load_bundled(name), SPEEDS[name]
    m = build_metric_axisym(prof, v)
    rc = circular_radius(prof, v)
    kp = prof.derivative(rc)
    pert = precession_perturbative(prof, rc)
    assert np.sign(pert) == -np.sign(kp)
    assert np.sign(precession_linear(prof, rc)) == -np.sign(kp)
    for f in (0.8, 0.9, 0.97):
        assert np.sign(precession_exact(m, ell_launch(m, f * rc), rc)) == -np.sign(kp)
    limit = precession_exact(m, ell_max(m, rc) * (1 - 1e-6), rc)
    assert abs(limit / pert - 1) < 1e-3


def test_precession_grows_away_from_rc(d139):
    prof, m = d139
    rc = circular_radius(prof, 0.309)
    vals = [abs(precession_exact(m, ell_launch(m, f * rc), rc)) for f in (0.97, 0.9, 0.8, 0.7)]
    assert np.all(np.diff(vals) > 0)
    # heavy vehicle on the deepest depression precesses by about pi/3
    assert abs(precession_exact(m, ell_launch(m, 0.45), rc)) == pytest.approx(np.pi / 3, rel=0.15)


def test_perturbative_closed_forms():
    prof = RadialProfile.polynomial([0.0, 0.2], 0.1, 1.1)  # k = 0.2 r, omega^2 = 2
    rc = circular_radius(prof, 0.25)
    assert precession_perturbative(prof, rc) == pytest.approx(2 * np.pi / np.sqrt(2) - 2 * np.pi)
    assert precession_perturbative(RadialProfile.constant(0.2, 0.1, 1.1), 0.5) == 0.0


def test_unstable_circular_orbit():
    # k = c / r^2 gives omega^2 = 1 - 2 < 0
    r = np.linspace(0.1, 1.1, 201)
    prof = RadialProfile.from_table(r, 0.01 / r ** 2)
    with pytest.raises(UnstableCircularOrbit):
        precession_perturbative(prof, 0.3)


def test_gauge_invariance(d139):
    _, m = d139
    m2 = m.with_gauge(2.5)
    ell = ell_launch(m, 0.45)
    assert precession_exact(m2, ell) == pytest.approx(precession_exact(m, ell), abs=1e-12)
    r = np.linspace(0.2, 1.0, 7)
    assert np.allclose(m2.alpha2(r), 2.5 ** 2 * m.alpha2(r))


def test_orbit_shape(d139):
    _, m = d139
    sh = orbit_shape(m, ell_launch(m, 0.45))
    assert sh.r_min == pytest.approx(0.45, abs=1e-9)
    assert sh.semi_major == pytest.approx(0.5 * (sh.r_min + sh.r_max))
    assert sh.latus_rectum == pytest.approx(sh.semi_major * (1 - sh.eccentricity ** 2))


def test_profile_domain(d139):
    prof, _ = d139
    with pytest.raises(DomainError):
        prof(1.2)
    with pytest.raises(DomainError):
        prof.integral(0.05)
    with pytest.raises(ValueError):
        RadialProfile.from_table([0.1, 0.2], [1, 2])
    with pytest.raises(KeyError):
        load_bundled("nope")


def test_polynomial_profile_calculus():
    prof = RadialProfile.polynomial([0.1, -0.2, 0.3], 0.0, 1.2)
    r = np.linspace(0.0, 1.2, 13)
    assert np.allclose(prof(r), 0.1 - 0.2 * r + 0.3 * r ** 2)
    assert np.allclose(prof.derivative(r), -0.2 + 0.6 * r)
    assert np.allclose(prof.integral(r), 0.1 * r - 0.1 * r ** 2 + 0.1 * r ** 3)


def test_csv_roundtrip(tmp_path, d139):
    prof, _ = d139
    prof.to_csv(tmp_path / "k.csv", n=401)
    back = RadialProfile.from_csv(tmp_path / "k.csv")
    r = np.linspace(0.1, 1.1, 50)
    assert np.allclose(back(r), prof(r), rtol=1e-4)


def test_geodesic_rhs_matches_physical():
    rng = np.random.default_rng(7)
    for name, v in SPEEDS.items():
        prof = load_bundled(name)
        x, ck, _, cK = prof.arrays()
        p = np.array([v, 1.0])
        for _ in range(50):
            r = rng.uniform(0.15, 1.05)
            th = rng.uniform(-np.pi, np.pi)
            rd, pd = v * np.cos(th), v * np.sin(th) / r
            a = np.array(rhs_physical(r, rd, pd, p, x, ck, cK, ck, ck))
            b = np.array(rhs_geodesic(r, rd, pd, p, x, ck, cK, ck, ck))
            assert np.max(np.abs(a - b)) < 1e-10


def test_flat_geodesic_rhs():
    prof = RadialProfile.constant(0.0, 0.0, 1.2)
    x, ck, _, cK = prof.arrays()
    r, rd, pd = 0.5, 0.1, 0.3
    a = rhs_geodesic(r, rd, pd, np.array([0.3, 1.0]), x, ck, cK, ck, ck)
    assert a[0] == pytest.approx(r * pd ** 2)
    assert a[1] == pytest.approx(-2 * rd * pd / r)
