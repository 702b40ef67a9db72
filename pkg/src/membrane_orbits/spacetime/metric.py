"""The fiducial spacetime in which vehicle paths are geodesics.

For a constant-speed vehicle with radial acceleration scale k(r) the metric is

    ds^2 = -alpha^2 dt^2 + Phi^2 (dr^2 + r^2 dphi^2),
    alpha^2 = E^2 (1 - v^2 w),   Phi^2 = E^2 w (1 - v^2 w),   w = exp(-K / v^2),

with K the antiderivative of k.  On general terrain K is replaced by C g z.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .profiles import RadialProfile

log = logging.getLogger(__name__)


class MetricDomainError(ValueError):
    """alpha^2 <= 0 somewhere: the speed is too large for this gauge."""


class NoCircularOrbit(ValueError):
    pass


class UnstableCircularOrbit(ValueError):
    pass


class NoBoundOrbit(ValueError):
    pass


def as_profile(k, lo=None, hi=None, n=2001) -> RadialProfile:
    """Accept a RadialProfile or sample a plain callable into a spline."""
    if isinstance(k, RadialProfile):
        return k
    if lo is None or hi is None:
        raise ValueError("a plain callable needs an explicit [lo, hi] range")
    r = np.linspace(lo, hi, n)
    return RadialProfile.smooth(r, np.vectorize(k)(r), name=getattr(k, "__name__", "k"))


class AxisymMetric:
    """Metric built from a radial profile k(r) and a constant speed v."""

    __slots__ = ("profile", "v", "E")

    def __init__(self, profile: RadialProfile, v: float, E: float = 1.0):
        object.__setattr__(self, "profile", profile)
        object.__setattr__(self, "v", float(v))
        object.__setattr__(self, "E", float(E))

    def __setattr__(self, *_):
        raise AttributeError("MetricField is immutable")

    @property
    def domain(self):
        return self.profile.lo, self.profile.hi

    def K(self, r):
        return self.profile.integral(r)

    def k(self, r):
        return self.profile(r)

    def w(self, r):
        return np.exp(-self.K(r) / self.v ** 2)

    def alpha2(self, r):
        return self.E ** 2 * (1 - self.v ** 2 * self.w(r))

    def Phi2(self, r):
        w = self.w(r)
        return self.E ** 2 * w * (1 - self.v ** 2 * w)

    def dalpha2(self, r):
        return self.E ** 2 * self.k(r) * self.w(r)

    def dPhi2(self, r):
        v2, w = self.v ** 2, self.w(r)
        return -self.E ** 2 * self.k(r) * w * (1 - 2 * v2 * w) / v2

    def with_gauge(self, E):
        return AxisymMetric(self.profile, self.v, E)


class GeneralMetric:
    """Metric on arbitrary terrain, with K = C g z(x, y)."""

    __slots__ = ("z", "C", "g", "v", "E")

    def __init__(self, z: Callable, C: float, g: float, v: float, E: float = 1.0):
        for name, val in (("z", z), ("C", float(C)), ("g", float(g)), ("v", float(v)),
                          ("E", float(E))):
            object.__setattr__(self, name, val)

    def __setattr__(self, *_):
        raise AttributeError("MetricField is immutable")

    def w(self, x, y):
        return np.exp(-self.C * self.g * np.asarray(self.z(x, y)) / self.v ** 2)

    def alpha2(self, x, y):
        return self.E ** 2 * (1 - self.v ** 2 * self.w(x, y))

    def Phi2(self, x, y):
        w = self.w(x, y)
        return self.E ** 2 * w * (1 - self.v ** 2 * w)

    def time_condition(self, z, zdot):
        """Terms of the time-dependence condition at height z moving at zdot.

        Returns (dlnalpha/dt, (alpha^2/Phi^2 - 2) v^2 dlnPhi/dt, residual).
        The mapping holds exactly only when the residual vanishes.
        """
        cg, v2 = self.C * self.g, self.v ** 2
        w = np.exp(-cg * np.asarray(z) / v2)
        s = w / (1 - v2 * w)
        dlna = 0.5 * cg * s
        dlnf = 0.5 * (-cg / v2 + cg * s)
        t1 = dlna * zdot
        t2 = (1.0 / w - 2.0) * v2 * dlnf * zdot
        return t1, t2, t1 + t2


MetricField = AxisymMetric | GeneralMetric


def _guard(alpha2_samples):
    bad = ~(alpha2_samples > 0)
    if np.any(bad):
        raise MetricDomainError("alpha^2 <= 0 on the domain: v^2 exp(-K/v^2) >= 1")


def build_metric_axisym(k_profile, v: float, E: float = 1.0, lo=None, hi=None) -> AxisymMetric:
    prof = as_profile(k_profile, lo, hi)
    if v <= 0:
        raise ValueError("speed must be positive")
    m = AxisymMetric(prof, v, E)
    _guard(m.alpha2(np.linspace(prof.lo, prof.hi, 1001)))
    return m


def build_metric_general(z_field: Callable, C: float, g: float, v: float, E: float = 1.0,
                         probe=None) -> GeneralMetric:
    """``probe`` is an optional (x, y) sample cloud used for the domain guard."""
    m = GeneralMetric(z_field, C, g, v, E)
    if probe is not None:
        _guard(m.alpha2(*probe))
    return m


# -- conserved quantities and orbit structure ---------------------------------

@dataclass(frozen=True)
class OrbitConstants:
    E: float
    L: float
    ell: float


@dataclass(frozen=True)
class OrbitShape:
    r_min: float
    r_max: float
    semi_major: float
    eccentricity: float
    latus_rectum: float
    precession: float = float("nan")

    @classmethod
    def from_radii(cls, r_min, r_max, precession=float("nan")):
        if r_min > r_max:
            raise ValueError("r_min > r_max")
        a = 0.5 * (r_max + r_min)
        e = (r_max - r_min) / (r_max + r_min)
        return cls(r_min, r_max, a, e, a * (1 - e * e), precession)


def ell_of(metric: AxisymMetric, r, phidot):
    return metric.w(r) * np.asarray(r) ** 2 * phidot


def conserved(metric: AxisymMetric, state) -> OrbitConstants:
    """``state`` is a PhysState or a polar tuple (r, phi, rdot, phidot)."""
    r, _, _, pd = state.polar() if hasattr(state, "polar") else state
    ell = float(ell_of(metric, r, pd))
    return OrbitConstants(metric.E, metric.E * ell, ell)


def ell_launch(metric: AxisymMetric, r0, theta0=np.pi / 2):
    return float(metric.w(r0) * r0 * metric.v * np.sin(theta0))


def effective_potential(metric: AxisymMetric, ell, r):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r must be positive")
    w = metric.w(r)
    return 0.5 * (ell ** 2 / (r * r * w) + 1 - metric.v ** 2 * w)


def circular_radius(k_profile, v, return_all=False, n_scan=2001):
    """Radius where k(r) r = v^2 (smallest root unless ``return_all``)."""
    prof = k_profile.profile if isinstance(k_profile, AxisymMetric) else as_profile(k_profile)
    r = np.linspace(prof.lo, prof.hi, n_scan)
    h = prof(r) * r - v * v
    roots = []
    for i in np.nonzero(np.sign(h[:-1]) * np.sign(h[1:]) <= 0)[0]:
        if h[i] == 0:
            roots.append(r[i])
        elif h[i + 1] != 0:
            roots.append(brentq(lambda s: prof(s) * s - v * v, r[i], r[i + 1], xtol=1e-12))
    roots = np.unique(np.round(roots, 12))
    if len(roots) == 0:
        raise NoCircularOrbit(f"k(r) r = v^2 has no root in [{prof.lo}, {prof.hi}]")
    if len(roots) > 1:
        log.warning("k(r) r = v^2 has %d roots: %s", len(roots), roots)
    return roots if return_all else float(roots[0])


def ell_max(metric: AxisymMetric, r_c=None):
    r_c = circular_radius(metric, metric.v) if r_c is None else r_c
    return float(metric.v * r_c * metric.w(r_c))


def turning_points(metric: AxisymMetric, ell, r_c=None):
    """(r_minus, r_plus) with r = |ell| e^{K/v^2} / v."""
    ell = abs(ell)
    r_c = circular_radius(metric, metric.v) if r_c is None else r_c
    g = lambda r: r * metric.v * metric.w(r) - ell
    lo, hi = metric.domain
    if g(r_c) <= 0:
        raise NoBoundOrbit("ell >= ell_max: no bound orbit")
    if g(lo) > 0 or g(hi) > 0:
        raise NoBoundOrbit("turning point lies outside the profile range")
    return (brentq(g, lo, r_c, xtol=1e-13, rtol=1e-14),
            brentq(g, r_c, hi, xtol=1e-13, rtol=1e-14))


def precession_perturbative(k_profile, r_c):
    """2 pi / omega - 2 pi with omega^2 = 1 + r_c k'_c / k_c."""
    prof = k_profile.profile if isinstance(k_profile, AxisymMetric) else as_profile(k_profile)
    q = r_c * prof.derivative(r_c) / prof(r_c)
    if 1 + q <= 0:
        raise UnstableCircularOrbit(f"omega^2 = {1 + q:.4g} <= 0 at r_c = {r_c}")
    return float(2 * np.pi / np.sqrt(1 + q) - 2 * np.pi)


def precession_linear(k_profile, r_c):
    """First-order form -pi r_c k'_c / k_c."""
    prof = k_profile.profile if isinstance(k_profile, AxisymMetric) else as_profile(k_profile)
    return float(-np.pi * r_c * prof.derivative(r_c) / prof(r_c))


def _k_between(metric, a, b):
    """K(b) - K(a), accurate when a and b are close.

    Points in the same table interval use a 4-point Gauss rule, exact for the
    cubic pieces; others fall back to differencing the antiderivative.
    """
    prof = metric.profile
    x = prof.pp.x
    same = np.searchsorted(x, a, side="right") == np.searchsorted(x, b, side="right")
    u, wq = np.polynomial.legendre.leggauss(4)
    d = b - a
    pts = a[:, None] + 0.5 * d[:, None] * (u + 1)
    local = 0.5 * d * (prof(pts.ravel()).reshape(pts.shape) @ wq)
    return np.where(same, local, metric.K(b) - metric.K(a))


def radial_cycle_azimuth(metric: AxisymMetric, ell, r_c=None, nodes=48):
    """Azimuth swept between successive periapses, from the orbit equation.

    With r = mid - half cos(chi) the integrand is finite at both turning
    points.  Table knots are kinks of the integrand, so chi is split there
    and each piece gets a fixed Gauss-Legendre rule; an adaptive rule stalls
    on roundoff near the turning points of nearly circular orbits.
    """
    ell = abs(ell)
    rm, rp = turning_points(metric, ell, r_c)
    mid, half = 0.5 * (rp + rm), 0.5 * (rp - rm)
    v2 = metric.v ** 2
    x = metric.profile.pp.x
    x = x[(x > rm) & (x < rp)]
    edges = np.concatenate([[0.0], np.sort(np.arccos((mid - x) / half)), [np.pi]])
    u, wq = np.polynomial.legendre.leggauss(nodes)
    a, b = edges[:-1, None], edges[1:, None]
    chi = (0.5 * (b - a) * u + 0.5 * (b + a)).ravel()
    wts = (0.5 * (b - a) * wq).ravel()
    # distance from the nearer turning point, where f = r v w / ell is 1;
    # the integrand is rewritten in half angles so it stays finite there
    lower = chi < 0.5 * np.pi
    rt = np.where(lower, rm, rp)
    trig = np.where(lower, np.sin(0.5 * chi), np.cos(0.5 * chi))
    d = np.where(lower, 1.0, -1.0) * 2 * half * trig ** 2
    r = rt + d
    L = np.log1p(d / rt) - _k_between(metric, rt, r) / v2
    fm1 = np.expm1(L)
    with np.errstate(invalid="ignore", divide="ignore"):
        G = fm1 * (fm1 + 2) / np.abs(d)
    # at the turning point itself, G is 2 |dL/dr|
    G0 = 2 * np.abs(1 / rt - metric.k(rt) / v2)
    G = np.where(np.isfinite(G) & (G > 0), G, G0)
    other = np.where(lower, np.cos(0.5 * chi), np.sin(0.5 * chi))
    val = np.sum(wts * np.sqrt(2 * half) * other / (r * np.sqrt(G)))
    return 2 * val, rm, rp


def precession_exact(metric: AxisymMetric, ell, r_c=None):
    dphi, _, _ = radial_cycle_azimuth(metric, ell, r_c)
    return float(dphi - 2 * np.pi)


def orbit_shape(metric: AxisymMetric, ell, r_c=None) -> OrbitShape:
    dphi, rm, rp = radial_cycle_azimuth(metric, ell, r_c)
    return OrbitShape.from_radii(rm, rp, dphi - 2 * np.pi)
