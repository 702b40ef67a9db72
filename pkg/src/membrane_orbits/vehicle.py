"""Mechanics of the differential-drive vehicle.

The vehicle keeps a constant speed and turns toward the lower wheel when it
tilts.  Everything about the drive train collapses into two numbers: the
turning constant ``C`` and the imbalance parameter ``epsilon``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

G = 9.8


@dataclass(frozen=True)
class VehicleParams:
    mass: float = 0.160
    Rv: float = 0.05
    Lc: float = 0.01
    dB: float = 0.0
    speed: float = 0.2
    g: float = G

    def __post_init__(self):
        if self.mass <= 0 or self.Rv <= 0 or self.Lc <= 0 or self.speed <= 0:
            raise ValueError("mass, Rv, Lc and speed must be positive")
        if abs(self.dB) >= self.Rv:
            raise ValueError("|dB| must be smaller than Rv")

    @property
    def C(self) -> float:
        return mechanical_constant(self)

    @property
    def epsilon(self) -> float:
        return epsilon(self)

    def with_(self, **kw) -> "VehicleParams":
        return replace(self, **kw)


HEAVY = VehicleParams()
LIGHT = VehicleParams(mass=0.045, Rv=0.02)

PRESETS = {"heavy": HEAVY, "light": LIGHT}


@dataclass
class PhysState:
    """Planar pose and velocity of a single vehicle."""

    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)

    @classmethod
    def from_polar(cls, r, phi, theta, speed):
        """Build a state from radius, azimuth and heading (angle from outward radial)."""
        er = np.array([np.cos(phi), np.sin(phi)])
        ephi = np.array([-np.sin(phi), np.cos(phi)])
        vel = speed * (np.cos(theta) * er + np.sin(theta) * ephi)
        return cls(r * er, vel)

    @property
    def r(self) -> float:
        return float(np.hypot(*self.position))

    @property
    def phi(self) -> float:
        return float(np.arctan2(self.position[1], self.position[0]))

    @property
    def speed(self) -> float:
        return float(np.hypot(*self.velocity))

    @property
    def theta(self) -> float:
        """Heading measured from the outward radial direction, in (-pi, pi]."""
        x, y = self.position
        vx, vy = self.velocity
        return float(np.arctan2(x * vy - y * vx, x * vx + y * vy))

    def polar(self):
        """Return (r, phi, rdot, phidot)."""
        x, y = self.position
        vx, vy = self.velocity
        r2 = x * x + y * y
        r = np.sqrt(r2)
        return r, np.arctan2(y, x), (x * vx + y * vy) / r, (x * vy - y * vx) / r2


def mechanical_constant(params: VehicleParams) -> float:
    Lc2 = params.Lc ** 2
    return Lc2 / (Lc2 + 0.5 * params.Rv ** 2)


def epsilon(params: VehicleParams) -> float:
    dB = params.dB
    return params.Lc * dB / (0.5 * params.Rv ** 2 + params.Lc ** 2 + dB ** 2)


def k_of_gamma(params: VehicleParams, gamma):
    """Radial acceleration scale for tilt ``gamma``."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0) or np.any(gamma >= np.pi / 2):
        raise ValueError("tilt must lie in [0, pi/2)")
    return params.C * params.g * np.sin(gamma) * np.cos(gamma)


def k_of_slope(params: VehicleParams, slope):
    """Small-angle form of :func:`k_of_gamma` with ``slope = |grad z|``."""
    return params.C * params.g * np.abs(slope)


def accel_axisymmetric(state: PhysState, k_at_r: float):
    """Return the polar components (a^r, a^phi) of the turning acceleration.

    ``a^phi`` is the coordinate component, i.e. the physical azimuthal
    acceleration divided by r.
    """
    r = state.r
    if r <= 0:
        raise ValueError("state at the origin has no heading")
    if state.speed <= 0:
        raise ValueError("zero velocity has no heading")
    th = state.theta
    a = k_at_r * np.sin(th)
    return -a * np.sin(th), a * np.cos(th) / r


def accel_general(state: PhysState, gradient, params: VehicleParams):
    """Turning acceleration on arbitrary terrain from the height gradient.

    ``gradient`` is grad z; the terrain direction is d = -grad z.
    """
    vx, vy = state.velocity
    v2 = vx * vx + vy * vy
    if v2 <= 0:
        raise ValueError("zero velocity has no heading")
    dx, dy = -np.asarray(gradient, dtype=float)
    cross = dx * vy - dy * vx
    cg = params.C * params.g
    return np.array([cg * vy * cross / v2, -cg * vx * cross / v2])


def bias_accel(params: VehicleParams, gamma: float, theta: float) -> float:
    """Signed acceleration from a lateral centre-of-mass offset.

    This is the full single-vehicle formula ``g sin(gamma) cos(theta) eps``,
    not normalised by ``C``.  The simulation uses the normalised form
    ``k * eps * cos(theta)``, see :func:`bias_term`.
    """
    return params.g * np.sin(gamma) * np.cos(theta) * epsilon(params)


def bias_term(k, theta, eps):
    """Bias added to the acceleration magnitude ``k sin(theta)``."""
    return k * eps * np.cos(theta)


def envelope_half_life(eps: float) -> float:
    """Azimuth over which the eccentricity halves, e^{-eps phi / 2}."""
    return 2.0 * np.log(2.0) / eps
