"""Tilt-feedback speed control for a leading vehicle.

The vehicle speeds up when it tilts more than a reference angle, i.e. when a
neighbour deepens the membrane under it:

    (v - v0) / v0 = A (gamma - gamma0) / gamma0,   clamped to [v_min, v_max].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .vehicle import G


@dataclass(frozen=True)
class TiltFeedback:
    A: float = 0.0
    gamma0: float = np.radians(15.0)
    v0: float = 0.15
    v_min: float = 0.05
    v_max: float = 0.40
    lag: float = 0.0  # first-order sensor time constant in s, 0 = ideal

    def __post_init__(self):
        if self.A < 0:
            raise ValueError("A must be nonnegative")
        if self.gamma0 <= 0:
            raise ValueError("gamma0 must be positive")
        if not 0 < self.v_min <= self.v0 <= self.v_max:
            raise ValueError("need 0 < v_min <= v0 <= v_max")
        if self.lag < 0:
            raise ValueError("lag must be nonnegative")


def commanded_speed(fb: TiltFeedback, gamma):
    v = fb.v0 * (1.0 + fb.A * (np.asarray(gamma) - fb.gamma0) / fb.gamma0)
    return np.clip(v, fb.v_min, fb.v_max)


def tilt_from_accel(accel) -> float:
    """Tilt from a 3-axis accelerometer reading (gravity only)."""
    a = np.asarray(accel, dtype=float)
    if not np.any(a):
        raise ValueError("zero acceleration vector has no direction")
    # arccos(a_z / |a|) written with atan2, which keeps precision near level
    return float(np.arctan2(np.hypot(a[0], a[1]), a[2]))


def synthetic_reading(gradient, g=G):
    """Accelerometer vector seen on terrain with height gradient ``gradient``."""
    gx, gy = np.asarray(gradient, dtype=float)
    slope = np.hypot(gx, gy)
    gamma = np.arctan(slope)
    if slope == 0:
        return np.array([0.0, 0.0, g])
    return np.array([g * np.sin(gamma) * gx / slope, g * np.sin(gamma) * gy / slope,
                     g * np.cos(gamma)])


def tilt_from_gradient(gradient):
    """Tilt angles for gradients of shape (..., 2)."""
    g = np.asarray(gradient, dtype=float)
    return np.arctan(np.hypot(g[..., 0], g[..., 1]))


class TiltSensor:
    """Sensed tilt with an optional first-order lag."""

    def __init__(self, lag=0.0):
        self.lag = lag
        self.value = None

    def update(self, gamma, dt):
        if self.value is None or self.lag == 0:
            self.value = gamma
        else:
            self.value += (gamma - self.value) * min(1.0, dt / self.lag)
        return self.value


def margin(record, controlled: int, passive: int, fit_ellipse_on_collision=True,
           window="first_encounter", max_fit_residual=0.05):
    """Closest approach b of the controlled vehicle to the passive one.

    Distances are measured in the passive vehicle's frame.  ``window`` limits
    the search to the first encounter (up to the first local minimum of the
    separation, or the collision) or uses the whole record (``"all"``).  When
    the encounter ends in a collision, the relative path before contact is
    fitted with an ellipse centred on the passive vehicle and b is its
    semi-minor axis, which extrapolates the miss distance.  The fit is used
    only when its relative RMS residual is below ``max_fit_residual``;
    otherwise the measured minimum stands.
    """
    rel = record.relative(controlled, passive)
    ok = np.all(np.isfinite(rel), axis=1)
    rel = rel[ok]
    if len(rel) < 5:
        raise ValueError("margin needs at least 5 samples")
    d = np.hypot(rel[:, 0], rel[:, 1])
    end = len(d)
    if window == "first_encounter":
        mins = np.nonzero((d[1:-1] < d[:-2]) & (d[1:-1] <= d[2:]))[0]
        if len(mins):
            end = mins[0] + 2
    elif window != "all":
        raise ValueError(f"unknown window {window!r}")
    b = float(d[:end].min())
    collided = record.first_collision(controlled, passive) is not None
    if collided and fit_ellipse_on_collision and end == len(d):
        fitted = _ellipse_semi_minor(rel[:end], max_fit_residual)
        if fitted is not None:
            b = min(fitted, b)
    return b


def _ellipse_semi_minor(pts, max_residual):
    """Semi-minor axis of the centred conic a x^2 + b xy + c y^2 = 1."""
    x, y = pts[:, 0], pts[:, 1]
    A = np.column_stack([x * x, x * y, y * y])
    coef, *_ = np.linalg.lstsq(A, np.ones(len(x)), rcond=None)
    if np.sqrt(np.mean((A @ coef - 1) ** 2)) > max_residual:
        return None
    Q = np.array([[coef[0], coef[1] / 2], [coef[1] / 2, coef[2]]])
    ev = np.linalg.eigvalsh(Q)
    if np.any(ev <= 0):
        return None  # hyperbola or degenerate: no closed extrapolation
    return float(1 / np.sqrt(ev.max()))
