"""Finite-difference oracle for the membrane Poisson problem.

Five-point Laplacian on a Cartesian grid covering the disk.  Nodes next to
the curved rim (or the cap rim) use Shortley-Weller weights with the exact
distance to the boundary, which keeps the scheme second order up to the
boundary.  Vehicle loads are the uniform footprint disks, with node coverage
estimated by supersampling and renormalised to the exact load mass.

Because the problem is linear, the matrix is factorised once and every
load's contribution is a separate right-hand side.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .membrane import LoadSet, MembraneModel


class FDSolveError(RuntimeError):
    pass


@dataclass
class FDField:
    """Discrete height field on the node grid (NaN outside the membrane)."""

    x: np.ndarray
    y: np.ndarray
    Z: np.ndarray

    @property
    def h(self):
        return self.x[1] - self.x[0]

    def interp(self, px, py):
        """Bilinear interpolation; nodes outside the domain count as 0."""
        Z = np.nan_to_num(self.Z)
        h = self.h
        fx = (np.asarray(px) - self.x[0]) / h
        fy = (np.asarray(py) - self.y[0]) / h
        i = np.clip(np.floor(fx).astype(int), 0, len(self.x) - 2)
        j = np.clip(np.floor(fy).astype(int), 0, len(self.y) - 2)
        tx, ty = fx - i, fy - j
        return ((1 - tx) * (1 - ty) * Z[j, i] + tx * (1 - ty) * Z[j, i + 1]
                + (1 - tx) * ty * Z[j + 1, i] + tx * ty * Z[j + 1, i + 1])

    def rim_average(self, center, radius, n=128):
        a = np.linspace(0, 2 * np.pi, n, endpoint=False)
        return float(np.mean(self.interp(center[0] + radius * np.cos(a),
                                          center[1] + radius * np.sin(a))))

    def to_csv(self, path):
        X, Y = np.meshgrid(self.x, self.y)
        m = ~np.isnan(self.Z)
        np.savetxt(path, np.column_stack([X[m], Y[m], self.Z[m]]), delimiter=",",
                   header="x_m,y_m,Z_m", comments="")


class PoissonDisk:
    """Factorised operator for  Laplace(Z) = f  on R0 < |r| < R."""

    def __init__(self, model: MembraneModel, grid_n: int):
        if grid_n < 64:
            raise ValueError("grid_n must be at least 64")
        self.model = model
        R, R0 = model.R, model.R0
        self.n = grid_n
        self.x = np.linspace(-R, R, grid_n + 1)
        self.h = h = self.x[1] - self.x[0]
        X, Y = np.meshgrid(self.x, self.x)
        rr = np.hypot(X, Y)
        inside = rr < R - 1e-12 * R
        if R0 > 0:
            inside &= rr > R0 + 1e-12 * R
        self.X, self.Y, self.inside = X, Y, inside
        idx = -np.ones(X.shape, dtype=np.int64)
        idx[inside] = np.arange(inside.sum())
        self.idx = idx

        rows, cols, vals = [], [], []
        bvec = np.zeros(inside.sum())  # boundary contributions per unit D
        jj, ii = np.nonzero(inside)
        p = idx[jj, ii]
        diag = np.zeros(len(p))
        for axis, (dj, di) in enumerate(((0, 1), (1, 0))):
            # theta fractions for the +/- neighbours along this axis
            th = {}
            for s in (1, -1):
                nj, ni = jj + s * dj, ii + s * di
                nb_in = inside[nj, ni]
                t = np.ones(len(p))
                bval = np.zeros(len(p))
                out = ~nb_in
                if np.any(out):
                    t[out], bval[out] = self._cut(X[jj[out], ii[out]], Y[jj[out], ii[out]],
                                                  axis, s)
                th[s] = (t, nb_in, nj, ni, bval)
            tp, tm = th[1][0], th[-1][0]
            for s, other in ((1, -1), (-1, 1)):
                t, nb_in, nj, ni, bval = th[s]
                w = 2.0 / (h * h * t * (tp + tm))
                rows.append(p[nb_in])
                cols.append(idx[nj[nb_in], ni[nb_in]])
                vals.append(w[nb_in])
                bvec[~nb_in] -= w[~nb_in] * bval[~nb_in]
            diag -= 2.0 / (h * h * tp * tm)
        rows.append(p)
        cols.append(p)
        vals.append(diag)
        N = len(p)
        A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(N, N))
        self.A = A
        self._bvec = bvec
        self._lu = splu(A)

    def _cut(self, x, y, axis, s):
        """Distance fraction and boundary value where the grid line leaves the domain."""
        R, R0, h, D = self.model.R, self.model.R0, self.h, self.model.D
        u = x if axis == 0 else y
        w = y if axis == 0 else x
        dist = np.full(len(u), np.inf)
        bval = np.zeros(len(u))
        # outer rim: u + s t h on circle radius R
        ub = s * np.sqrt(np.maximum(R * R - w * w, 0.0))
        d_out = (ub - u) * s
        ok = (d_out > 0) & (d_out <= h * (1 + 1e-12))
        dist[ok] = d_out[ok]
        if R0 > 0:
            disc = R0 * R0 - w * w
            has = disc > 0
            for root in (-1, 1):
                uc = root * np.sqrt(np.where(has, disc, 0.0))
                d_in = (uc - u) * s
                okc = has & (d_in > 0) & (d_in <= h * (1 + 1e-12)) & (d_in < dist)
                dist[okc] = d_in[okc]
                bval[okc] = -D
        miss = ~np.isfinite(dist)
        if np.any(miss):
            # neighbour sits on a rim to round-off (tangent grid line)
            rn = np.hypot(u[miss] + s * h, w[miss])
            on_cap = (R0 > 0) & (np.abs(rn - R0) < 1e-9 * R)
            on_rim = np.abs(rn - R) < 1e-9 * R
            fix = np.flatnonzero(miss)[on_cap | on_rim]
            dist[fix] = h
            bval[np.flatnonzero(miss)[on_cap]] = -D
        if np.any(~np.isfinite(dist)):
            raise FDSolveError("failed to locate boundary crossing")
        return np.maximum(dist / h, 1e-6), bval

    def solve(self, f_nodes):
        """Solve with right-hand side values at the interior nodes."""
        b = f_nodes + self._bvec
        Zi = self._lu.solve(b)
        res = np.linalg.norm(self.A @ Zi - b) / max(np.linalg.norm(b), 1e-300)
        if not np.isfinite(res) or res > 1e-8:
            raise FDSolveError(f"linear solve did not converge (relative residual {res:.2e})")
        return Zi

    def boundary_only(self):
        """Harmonic part carrying the Dirichlet data (cap depth) with zero source."""
        return self.solve(np.zeros(len(self._bvec)))

    def field(self, Zi) -> FDField:
        Z = np.full(self.X.shape, np.nan)
        Z[self.inside] = Zi
        return FDField(self.x, self.x.copy(), Z)

    def footprint(self, center, radius, supersample=8):
        """Node coverage of a disk, normalised so that sum * h^2 = pi radius^2."""
        h = self.h
        cx, cy = center
        pad = radius + h
        sel = self.inside & (np.abs(self.X - cx) < pad) & (np.abs(self.Y - cy) < pad)
        jj, ii = np.nonzero(sel)
        off = (np.arange(supersample) + 0.5) / supersample - 0.5
        ox, oy = np.meshgrid(off * h, off * h)
        px = self.X[jj, ii][:, None] + ox.ravel()[None, :] - cx
        py = self.Y[jj, ii][:, None] + oy.ravel()[None, :] - cy
        cov = np.mean(px * px + py * py < radius * radius, axis=1)
        tot = cov.sum() * h * h
        if tot <= 0:
            raise ValueError("load footprint does not cover any grid node")
        cov *= np.pi * radius ** 2 / tot
        f = np.zeros(len(self._bvec))
        f[self.idx[jj, ii]] = cov
        return f


def solve_fd(model: MembraneModel, loads: LoadSet | None, grid_n: int,
             operator: PoissonDisk | None = None) -> FDField:
    """Finite-difference height field for the membrane and its loads."""
    op = operator or PoissonDisk(model, grid_n)
    f = np.full(len(op._bvec), 1.0 / model.lam)
    if loads is not None and len(loads):
        for pos, m, rv in zip(loads.positions, loads.masses, loads.radii):
            f += op.footprint(pos, rv) * m / (np.pi * rv * rv * model.sigma * model.lam)
    return op.field(op.solve(f))


def fd_vehicle_heights(model: MembraneModel, loads: LoadSet, grid_n: int,
                       operator: PoissonDisk | None = None) -> np.ndarray:
    fld = solve_fd(model, loads, grid_n, operator)
    return np.array([fld.rim_average(p, rv) for p, rv in zip(loads.positions, loads.radii)])
