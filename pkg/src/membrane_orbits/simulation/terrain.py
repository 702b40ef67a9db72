"""Terrain models that turn vehicle positions into heights and gradients.

Every terrain answers ``evaluate(pos)`` with heights z (n,) and height
gradients grad z (n, 2) for all vehicles at once.  With ``heights=False`` a
terrain may skip the heights (returning None) when only forces are needed.  ``interacting`` tells the
engine whether one vehicle's position changes another's terrain.
"""
from __future__ import annotations

import numpy as np

from ..membrane import MembraneModel, free_profile, free_profile_slope, height_gradients, _heights
from ..spacetime.polar import ppeval_many
from ..spacetime.profiles import RadialProfile


class Terrain:
    interacting = False
    R0 = 0.0
    R = np.inf

    def evaluate(self, pos, heights=True):
        raise NotImplementedError

    def limits(self, Rv):
        """(crash, escape) radii for vehicles of radius ``Rv``."""
        Rv = np.asarray(Rv, dtype=float)
        inner = np.where(self.R0 > 0, self.R0 + Rv, 0.0)
        return inner, self.R - Rv


class FlatTerrain(Terrain):
    def __init__(self, R=np.inf):
        self.R = R

    def evaluate(self, pos, heights=True):
        return np.zeros(len(pos)), np.zeros_like(pos)


class ProfileTerrain(Terrain):
    """Axisymmetric terrain given directly as k(r).

    The profile fixes the turning acceleration, so the equivalent slope
    seen by vehicle i is k(r) / (C_i g).  Heights are reported in the same
    equivalent form, K(r) / (C_i g).
    """

    def __init__(self, profile: RadialProfile, cg, R=np.inf, R0=0.0):
        self.profile = profile
        self.cg = np.asarray(cg, dtype=float)
        self.R, self.R0 = R, R0
        self._x, self._ck, _, self._cK = profile.arrays()

    def limits(self, Rv):
        # the table range bounds the motion as well as the disk
        inner, outer = super().limits(Rv)
        return np.maximum(inner, self.profile.lo), np.minimum(outer, self.profile.hi)

    def evaluate(self, pos, heights=True):
        r = np.hypot(pos[:, 0], pos[:, 1])
        rc = np.clip(r, self.profile.lo, self.profile.hi)
        slope = ppeval_many(self._x, self._ck, rc) / self.cg
        z = ppeval_many(self._x, self._cK, rc) / self.cg if heights else None
        # at r = 0 the position itself is zero, so any finite divisor works
        return z, pos * (slope / np.where(r > 0, r, 1.0))[:, None]


class FreeSurfaceTerrain(Terrain):
    """Unloaded membrane depressed by a central cap of depth D."""

    def __init__(self, model: MembraneModel):
        if model.R0 <= 0 or model.D <= 0:
            raise ValueError("free surface terrain needs a central cap")
        self.model = model
        self.R, self.R0 = model.R, model.R0

    def evaluate(self, pos, heights=True):
        r = np.clip(np.hypot(pos[:, 0], pos[:, 1]), self.model.R0, self.model.R)
        z = free_profile(self.model, r) if heights else None
        return z, pos * (free_profile_slope(self.model, r) / r)[:, None]


class MembraneTerrain(Terrain):
    """Membrane deformed by the vehicles themselves (point-load images)."""

    interacting = True

    def __init__(self, model: MembraneModel, masses, radii):
        if model.R0 > 0:
            raise ValueError("the loaded membrane solution needs R0 = 0")
        self.model = model
        self.masses = np.asarray(masses, dtype=float)
        self.radii = np.asarray(radii, dtype=float)
        self.R = model.R

    def evaluate(self, pos, heights=True):
        m = self.model
        z = _heights(m.R, m.lam, m.sigma, pos, self.masses, self.radii) if heights else None
        return z, height_gradients(m.R, m.lam, m.sigma, pos, self.masses)
