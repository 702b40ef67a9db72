"""Quasi-static shape of a circular elastic membrane under point loads.

The height obeys  Laplace(Z) = (1 + P) / lambda  on a disk of radius R with
Z = 0 on the rim, where P is the vehicle areal load normalised by the
membrane areal density.  Vehicle loads are treated as point masses with
image charges at (R/|r|)^2 r; the self-load term carries the vehicle radius
because the vehicle sits on the rim of its own footprint.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

CENTER_TOL = 1e-6


@dataclass(frozen=True)
class MembraneModel:
    R: float = 1.2
    R0: float = 0.0
    D: float = 0.0
    lam: float = 6.5
    sigma: float = 0.137
    heterogeneity_amp: float = 0.0
    heterogeneity_seed: int = 0

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("R must be positive")
        if not 0 <= self.R0 < self.R:
            raise ValueError("need 0 <= R0 < R")
        if self.D < 0:
            raise ValueError("D must be nonnegative")
        if self.lam <= 0 or self.sigma <= 0:
            raise ValueError("lambda and sigma must be positive")
        if not 0 <= self.heterogeneity_amp < 1:
            raise ValueError("heterogeneity amplitude must lie in [0, 1)")


@dataclass
class LoadSet:
    """Point loads: positions (n, 2), masses (n,), radii (n,)."""

    positions: np.ndarray
    masses: np.ndarray
    radii: np.ndarray = field(default=None)

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        n = len(self.positions)
        self.masses = np.broadcast_to(np.asarray(self.masses, dtype=float), (n,)).copy()
        radii = 0.05 if self.radii is None else self.radii
        self.radii = np.broadcast_to(np.asarray(radii, dtype=float), (n,)).copy()
        if np.any(self.masses <= 0) or np.any(self.radii <= 0):
            raise ValueError("load masses and radii must be positive")

    def __len__(self):
        return len(self.masses)

    def check_inside(self, R):
        r = np.hypot(self.positions[:, 0], self.positions[:, 1])
        if np.any(r >= R):
            raise ValueError("every load must lie strictly inside the disk")


@dataclass
class FieldSample:
    height: float
    gradient: np.ndarray


def free_profile(model: MembraneModel, r):
    """Unloaded membrane held at depth D on the cap rim r = R0."""
    if model.R0 <= 0 or model.D <= 0:
        raise ValueError("free_profile needs a central cap (R0 > 0 and D > 0)")
    r = np.asarray(r, dtype=float)
    if np.any(r < model.R0 - 1e-12) or np.any(r > model.R + 1e-12):
        raise ValueError("r outside [R0, R]")
    c1, c2 = _free_constants(model)
    return r * r / (4 * model.lam) + c1 * np.log(r) + c2


def free_profile_slope(model: MembraneModel, r):
    c1, _ = _free_constants(model)
    r = np.asarray(r, dtype=float)
    return r / (2 * model.lam) + c1 / r


def _free_constants(model):
    R, R0, lam, D = model.R, model.R0, model.lam, model.D
    c1 = ((R0 ** 2 - R ** 2) / (4 * lam) + D) / np.log(R / R0)
    c2 = -R ** 2 / (4 * lam) - c1 * np.log(R)
    return c1, c2


def _check(model, loads):
    if model.R0 > 0:
        raise ValueError("the image solution is only valid without a central cap")
    loads.check_inside(model.R)


def vehicle_heights(model: MembraneModel, loads: LoadSet) -> np.ndarray:
    """Rim-averaged height under each load."""
    _check(model, loads)
    return _heights(model.R, model.lam, model.sigma, loads.positions,
                    loads.masses, loads.radii)


def _heights(R, lam, sigma, pos, m, rv):
    r2 = np.einsum("ij,ij->i", pos, pos)
    out = 0.5 * np.pi * (r2 - R * R) + (m / sigma) * np.log(rv * R / (R * R - r2))
    n = len(m)
    if n > 1:
        rn = np.sqrt(r2)
        for j in range(n):
            others = np.arange(n) != j
            ri = pos[others]
            if rn[j] < CENTER_TOL:
                # Green's function with the source at the centre
                g = np.log(np.sqrt(r2[others]) / R)
            else:
                img = pos[j] * (R / rn[j]) ** 2
                g = (np.log(np.hypot(*(ri - pos[j]).T) / np.hypot(*(ri - img).T))
                     - np.log(rn[j] / R))
            out[others] += m[j] / sigma * g
    return out / (2 * np.pi * lam)


def height_gradients(R, lam, sigma, pos, m):
    """grad_{r_i} z_i for every load, shape (n, 2).

    Only terms that depend on r_i are differentiated, so the vehicle radius
    drops out.
    """
    r2 = np.einsum("ij,ij->i", pos, pos)
    grad = np.pi * pos + (m / sigma * 2.0 / (R * R - r2))[:, None] * pos
    n = len(m)
    if n > 1:
        rn = np.sqrt(r2)
        for j in range(n):
            others = np.arange(n) != j
            ri = pos[others]
            if rn[j] < CENTER_TOL:
                dg = ri / r2[others][:, None]
            else:
                img = pos[j] * (R / rn[j]) ** 2
                a = ri - pos[j]
                b = ri - img
                dg = (a / np.einsum("ij,ij->i", a, a)[:, None]
                      - b / np.einsum("ij,ij->i", b, b)[:, None])
            grad[others] += m[j] / sigma * dg
    return grad / (2 * np.pi * lam)


def terrain_gradient(model: MembraneModel, loads: LoadSet, i: int | None = None):
    """Terrain direction d_i = -grad z_i; all loads when ``i`` is None."""
    _check(model, loads)
    d = -height_gradients(model.R, model.lam, model.sigma, loads.positions, loads.masses)
    return d if i is None else d[i]


def sample(model: MembraneModel, loads: LoadSet, i: int) -> FieldSample:
    z = vehicle_heights(model, loads)[i]
    return FieldSample(float(z), -terrain_gradient(model, loads, i))


class Heterogeneity:
    """Seeded multiplicative fluctuation, piecewise constant in arc length.

    Each stream (one per vehicle or per trial) is an independent sequence, and
    draws are generated lazily in fixed blocks, so the value at a given arc
    index never depends on the order of queries.
    """

    block = 1024

    def __init__(self, amp: float, seed: int = 0):
        self.amp = float(amp)
        self.seed = int(seed)
        self._cache: dict[tuple[int, int], np.ndarray] = {}

    def _block(self, stream, b):
        key = (stream, b)
        if key not in self._cache:
            ss = np.random.SeedSequence([self.seed, stream, b])
            rng = np.random.default_rng(ss)
            self._cache[key] = rng.uniform(1 - self.amp, 1 + self.amp, self.block)
        return self._cache[key]

    def factor(self, arc_index, stream=0):
        if self.amp == 0:
            return np.ones(np.shape(arc_index)) if np.ndim(arc_index) else 1.0
        idx = np.asarray(arc_index, dtype=np.int64)
        streams = np.broadcast_to(np.asarray(stream, dtype=np.int64), idx.shape)
        if idx.ndim == 0:
            b, o = divmod(int(idx), self.block)
            return float(self._block(int(streams), b)[o])
        out = np.empty(idx.shape)
        for k, (s, a) in enumerate(zip(streams.ravel(), idx.ravel())):
            b, o = divmod(int(a), self.block)
            out.flat[k] = self._block(int(s), b)[o]
        return out


def heterogeneity_factor(model: MembraneModel, arc_index, stream=0):
    """Multiplier on k for the R_v-length segment ``arc_index``."""
    return Heterogeneity(model.heterogeneity_amp, model.heterogeneity_seed).factor(
        arc_index, stream)
