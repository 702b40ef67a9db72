"""Post-processing of simulated trajectories.

Precession is measured two ways: apsis to apsis on the detected events, and
by fitting the whole r(phi) series with

    r(phi) = r_c + exp(-phi/tau) (A1 cos(phi + phi1) + A2 cos(w phi + phi2)),

where the A1 term absorbs features fixed in space (membrane defects recur
every 2 pi) and w carries the precession, 2 pi / w - 2 pi.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .spacetime.metric import GeneralMetric, OrbitShape
from .vehicle import VehicleParams

log = logging.getLogger(__name__)


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class PrecessionFit:
    r_c: float
    A1: float
    A2: float
    phi1: float
    phi2: float
    omega_prec: float
    tau: float  # rad; negative means a growing envelope, inf means none
    residual: float

    @property
    def precession(self):
        return 2 * np.pi / self.omega_prec - 2 * np.pi

    def model(self, phi):
        return _model(np.asarray(phi, float), self)


def _model(phi, f):
    env = np.exp(-phi / f.tau) if np.isfinite(f.tau) else 1.0
    return f.r_c + env * (f.A1 * np.cos(phi + f.phi1) + f.A2 * np.cos(f.omega_prec * phi + f.phi2))


def _basis(phi, omega, beta):
    env = np.exp(-beta * phi)
    return np.column_stack([np.ones_like(phi), env * np.cos(phi), env * np.sin(phi),
                            env * np.cos(omega * phi), env * np.sin(omega * phi)])


def _solve_linear(phi, r, omega, beta):
    B = _basis(phi, omega, beta)
    coef, *_ = np.linalg.lstsq(B, r, rcond=None)
    res = r - B @ coef
    return coef, float(res @ res)


def fit_precession(phi, r, omegas=None, tol=1e-13) -> PrecessionFit:
    """Least-squares fit of the precession model to an (phi, r) series.

    The amplitudes and phases enter linearly and are solved exactly for each
    trial (omega, 1/tau); those two are searched with Nelder-Mead from
    several starting frequencies and the best residual wins.  ``phi`` may
    run in either direction; it is reoriented to increase from zero.
    """
    phi = np.asarray(phi, dtype=float)
    r = np.asarray(r, dtype=float)
    ok = np.isfinite(phi) & np.isfinite(r)
    phi, r = phi[ok], r[ok]
    if len(phi) < 20:
        raise FitError("too few samples to fit")
    phi = np.sign(phi[-1] - phi[0]) * (phi - phi[0])
    if phi[-1] < 4 * np.pi:
        raise FitError("fit needs at least two revolutions of data")
    omegas = np.linspace(0.7, 1.3, 9) if omegas is None else np.asarray(omegas)
    scale = float(np.var(r)) * len(r) or 1.0

    def obj(p):
        if p[0] <= 0:
            return np.inf
        return _solve_linear(phi, r, p[0], p[1])[1] / scale

    best = None
    for w0 in omegas:
        res = minimize(obj, [w0, 0.0], method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": tol, "maxiter": 4000,
                                "initial_simplex": [[w0, 0.0], [w0 + 0.02, 0.0], [w0, 0.005]]})
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not np.isfinite(best.fun):
        raise FitError("no start converged")
    # polish from the winner
    best = minimize(obj, best.x, method="Nelder-Mead",
                    options={"xatol": 1e-14, "fatol": tol * 1e-3, "maxiter": 4000})
    omega, beta = best.x
    coef, ss = _solve_linear(phi, r, omega, beta)
    A1, phi1 = np.hypot(coef[1], coef[2]), np.arctan2(-coef[2], coef[1])
    A2, phi2 = np.hypot(coef[3], coef[4]), np.arctan2(-coef[4], coef[3])
    tau = np.inf if beta == 0 else 1.0 / beta
    return PrecessionFit(float(coef[0]), float(A1), float(A2), float(phi1), float(phi2),
                         float(abs(omega)), float(tau), ss)


def fit_record(record, i=0, **kw) -> PrecessionFit:
    return fit_precession(record.azimuth(i), record.radius(i), **kw)


@dataclass(frozen=True)
class MeasuredOrbit(OrbitShape):
    precession_sd: float = float("nan")
    n_pairs: int = 0
    circular: bool = False


def orbit_shape(record, i=0, skip=0, min_swing=None) -> MeasuredOrbit:
    """Shape and apsis-to-apsis precession of vehicle ``i``.

    ``skip`` drops that many leading apsides (launch transient).  With
    ``min_swing`` the apsides are re-detected with that prominence filter.
    """
    if min_swing is not None:
        from .simulation.events import find_apsides
        cols = (record[f][:, i] for f in ("x", "y", "vx", "vy"))
        ap = [(t, k, r, p) for t, k, r, p in find_apsides(record.t, *cols, min_swing=min_swing)]
    else:
        ap = [(e.t, e.kind, e.data["r"], e.data["phi"]) for e in record.apsides(i)]
    ap = ap[skip:]
    apo = [a for a in ap if a[1] == "apoapsis"]
    peri = [a for a in ap if a[1] == "periapsis"]
    if not apo or not peri:
        r = record.radius(i)
        rm = float(np.nanmean(r))
        return MeasuredOrbit.from_radii(rm, rm, circular=True)
    phi = record.azimuth(i)
    fin = phi[np.isfinite(phi)]
    s = np.sign(fin[-1] - fin[0]) or 1.0
    steps = []
    for group in (apo, peri):
        p = np.array([a[3] for a in group])
        steps.extend(s * np.diff(p) - 2 * np.pi)
    steps = np.array(steps)
    r_max = float(np.mean([a[2] for a in apo]))
    r_min = float(np.mean([a[2] for a in peri]))
    prec = float(steps.mean()) if len(steps) else float("nan")
    sd = float(steps.std(ddof=1)) if len(steps) > 1 else float("nan")
    return MeasuredOrbit.from_radii(r_min, r_max, prec, precession_sd=sd,
                                    n_pairs=len(steps))


def _from_radii(cls, r_min, r_max, precession=float("nan"), **extra):
    base = OrbitShape.from_radii(r_min, r_max, precession)
    return cls(base.r_min, base.r_max, base.semi_major, base.eccentricity,
               base.latus_rectum, base.precession, **extra)


MeasuredOrbit.from_radii = classmethod(_from_radii)


def periapsis_precession(record, i=0, min_swing=0.0):
    """Mean precession from the first to the last periapsis, NaN if < 2."""
    from .simulation.events import find_apsides
    cols = (record[f][:, i] for f in ("x", "y", "vx", "vy"))
    ph = [p for _, k, _, p in find_apsides(record.t, *cols, min_swing=min_swing)
          if k == "periapsis"]
    if len(ph) < 2:
        return float("nan")
    s = np.sign(ph[-1] - ph[0])
    return float(s * (ph[-1] - ph[0]) / (len(ph) - 1) - 2 * np.pi)


@dataclass(frozen=True)
class Envelope:
    tau: float  # azimuthal decay constant of the radial amplitude, rad
    amplitude0: float
    n_points: int

    @property
    def half_life(self):
        return self.tau * np.log(2)


def envelope_fit(record, i=0) -> Envelope:
    """Fit |r_apo - r_peri| between successive apsides to A0 exp(-phi/tau)."""
    ap = record.apsides(i)
    if len(ap) < 3:
        raise FitError("need at least three apsides for an envelope")
    r = np.array([e.data["r"] for e in ap])
    p = np.array([e.data["phi"] for e in ap])
    p = np.sign(p[-1] - p[0]) * (p - p[0])
    amp = np.abs(np.diff(r))
    mid = 0.5 * (p[1:] + p[:-1])
    slope, icpt = np.polyfit(mid, np.log(amp), 1)
    tau = np.inf if slope == 0 else -1.0 / slope
    return Envelope(float(tau), float(np.exp(icpt)), len(amp))


def is_steady(record, i=0, min_revolutions=5.0):
    """Eccentricity half-life longer than ``min_revolutions`` revolutions."""
    try:
        env = envelope_fit(record, i)
    except FitError:
        return True
    return env.tau < 0 or env.half_life > 2 * np.pi * min_revolutions


def capture_time(record, i=0, j=1):
    e = record.first_collision(i, j)
    return None if e is None else float(e.t)


def quasi_static_check(record, params: list[VehicleParams], E=1.0):
    """Size of the time-dependence terms along every trajectory.

    The partial time derivative of the height under vehicle i is the total
    derivative of the recorded z_i minus the advective part grad z . v.
    Returns per-vehicle dicts with the peak magnitudes of both terms and of
    the residual, and their ratio.
    """
    out = []
    t = record.t
    for i, p in enumerate(params):
        z = record["z"][:, i]
        ok = np.isfinite(z)
        if ok.sum() < 3:
            out.append({"vehicle": i, "samples": int(ok.sum())})
            continue
        zt = np.gradient(z[ok], t[ok])
        adv = record["gx"][ok, i] * record["vx"][ok, i] + record["gy"][ok, i] * record["vy"][ok, i]
        zdot = zt - adv
        m = GeneralMetric(lambda x, y: 0.0, p.C, p.g, p.speed, E)
        t1, t2, res = m.time_condition(z[ok], zdot)
        big = max(np.max(np.abs(t1)), np.max(np.abs(t2)))
        out.append({"vehicle": i, "max_term1": float(np.max(np.abs(t1))),
                    "max_term2": float(np.max(np.abs(t2))),
                    "max_residual": float(np.max(np.abs(res))),
                    "ratio": float(np.max(np.abs(res)) / big) if big > 0 else 0.0,
                    "max_partial_zdot": float(np.max(np.abs(zdot))),
                    "max_advective_zdot": float(np.max(np.abs(adv)))})
    return out


SUMMARY_COLUMNS = ("scenario", "r0", "theta0", "D", "ell", "prec_measured",
                   "prec_perturbative", "prec_exact", "e", "a", "capture_time", "b")


def write_summary(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: row.get(k, "") for k in SUMMARY_COLUMNS})
