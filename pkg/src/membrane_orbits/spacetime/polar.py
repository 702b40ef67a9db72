"""Compiled fixed-step RK4 integrators for axisymmetric orbits in polar form.

State vector is (r, phi, rdot, phidot).  Three right-hand sides are provided:

* ``physical``: the vehicle turning law with constant speed v,
* ``geodesic``: the geodesic equations of the fiducial metric, assembled
  from alpha^2, Phi^2 and their radial derivatives,
* ``varspeed``: the turning law for a speed that depends on radius.

Profiles enter as piecewise-polynomial arrays (see ``RadialProfile.arrays``).
"""
from __future__ import annotations

import numpy as np
from numba import njit

OK, LEFT_DOMAIN, NONFINITE = 0, 1, 2


@njit(cache=True)
def ppeval(x, c, r):
    n = x.shape[0]
    i = np.searchsorted(x, r, side="right") - 1
    if i < 0:
        i = 0
    elif i > n - 2:
        i = n - 2
    dx = r - x[i]
    out = 0.0
    for m in range(c.shape[0]):
        out = out * dx + c[m, i]
    return out


@njit(cache=True)
def ppeval_many(x, c, r):
    out = np.empty(r.shape[0])
    for j in range(r.shape[0]):
        out[j] = ppeval(x, c, r[j])
    return out


@njit(cache=True)
def rhs_physical(r, rd, pd, p, x, ck, cK, cv, cdv):
    v = p[0]
    k = ppeval(x, ck, r)
    s = k / (v * v)
    return r * pd * pd + s * rd * rd - k, -2.0 * rd * pd / r + s * rd * pd


@njit(cache=True)
def rhs_geodesic(r, rd, pd, p, x, ck, cK, cv, cdv):
    v, E = p[0], p[1]
    v2 = v * v
    k = ppeval(x, ck, r)
    w = np.exp(-ppeval(x, cK, r) / v2)
    E2 = E * E
    a2 = E2 * (1.0 - v2 * w)
    f2 = E2 * w * (1.0 - v2 * w)
    da2 = E2 * k * w
    df2 = -E2 * k * w * (1.0 - 2.0 * v2 * w) / v2
    brk = da2 / a2 - df2 / f2
    return (r * pd * pd + brk * rd * rd + (df2 * v2 - da2) / (2.0 * f2),
            -2.0 * rd * pd / r + brk * rd * pd)


@njit(cache=True)
def rhs_varspeed(r, rd, pd, p, x, ck, cK, cv, cdv):
    # speed profile shares the breakpoints of k
    k = ppeval(x, ck, r)
    v = ppeval(x, cv, r)
    s = ppeval(x, cdv, r) / v + k / (v * v)
    return r * pd * pd + s * rd * rd - k, -2.0 * rd * pd / r + s * rd * pd


@njit(cache=True)
def _integrate(rhs, y0, dt, nsteps, every, p, x, ck, cK, cv, cdv):
    nrec = nsteps // every + 1
    out = np.empty((nrec, 5))
    r, ph, rd, pd = y0[0], y0[1], y0[2], y0[3]
    out[0, 0] = 0.0
    out[0, 1:] = y0
    lo, hi = x[0], x[x.shape[0] - 1]
    h2 = 0.5 * dt
    status = OK
    j = 1
    for n in range(1, nsteps + 1):
        a1, b1 = rhs(r, rd, pd, p, x, ck, cK, cv, cdv)
        r2, rd2, pd2 = r + h2 * rd, rd + h2 * a1, pd + h2 * b1
        a2, b2 = rhs(r2, rd2, pd2, p, x, ck, cK, cv, cdv)
        r3, rd3, pd3 = r + h2 * rd2, rd + h2 * a2, pd + h2 * b2
        a3, b3 = rhs(r3, rd3, pd3, p, x, ck, cK, cv, cdv)
        r4, rd4, pd4 = r + dt * rd3, rd + dt * a3, pd + dt * b3
        a4, b4 = rhs(r4, rd4, pd4, p, x, ck, cK, cv, cdv)
        r = r + dt / 6.0 * (rd + 2.0 * rd2 + 2.0 * rd3 + rd4)
        ph = ph + dt / 6.0 * (pd + 2.0 * pd2 + 2.0 * pd3 + pd4)
        rd = rd + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        pd = pd + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        if not (np.isfinite(r) and np.isfinite(pd)):
            status = NONFINITE
            break
        if r < lo or r > hi:
            status = LEFT_DOMAIN
            break
        if n % every == 0:
            out[j, 0] = n * dt
            out[j, 1] = r
            out[j, 2] = ph
            out[j, 3] = rd
            out[j, 4] = pd
            j += 1
    return out[:j], status


_RHS = {"physical": rhs_physical, "geodesic": rhs_geodesic, "varspeed": rhs_varspeed}


class IntegrationError(RuntimeError):
    pass


def initial_state(r0, theta0, v0, phi0=0.0):
    """(r, phi, rdot, phidot) from launch radius, heading and speed."""
    return np.array([r0, phi0, v0 * np.cos(theta0), v0 * np.sin(theta0) / r0])


def integrate(kind, profile, y0, dt, t_end, v=None, E=1.0, speed_profile=None,
              every=1, strict=True):
    """Integrate an orbit; returns (samples[:, t r phi rdot phidot], status).

    ``profile`` is the k(r) RadialProfile.  For ``kind="varspeed"`` the speed
    profile must share k's breakpoints.
    """
    rhs = _RHS[kind]
    x, ck, _, cK = profile.arrays()
    if kind == "varspeed":
        if speed_profile is None:
            raise ValueError("varspeed needs a speed profile")
        xv, cv, cdv, _ = speed_profile.arrays()
        if xv.shape != x.shape or np.any(xv != x):
            raise ValueError("speed profile must share the k breakpoints")
        p = np.array([0.0, E])
    else:
        if v is None:
            raise ValueError("constant speed v required")
        cv = cdv = ck
        p = np.array([float(v), float(E)])
    nsteps = int(round(t_end / dt))
    out, status = _integrate(rhs, np.asarray(y0, dtype=float), float(dt), nsteps,
                             int(every), p, x, ck, cK, cv, cdv)
    if strict and status == NONFINITE:
        raise IntegrationError(f"non-finite state at t={out[-1, 0]:.4g}")
    if strict and status == LEFT_DOMAIN:
        raise IntegrationError(f"orbit left the profile range at t={out[-1, 0]:.4g}")
    return out, status


def to_cartesian(samples):
    r, phi = samples[:, 1], samples[:, 2]
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])
