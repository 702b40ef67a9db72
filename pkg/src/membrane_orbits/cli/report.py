"""Per-run analysis tables, summaries and threshold checks."""
from __future__ import annotations

import math

import numpy as np

from .. import analysis
from ..controller import margin
from ..spacetime import (NoBoundOrbit, NoCircularOrbit, UnstableCircularOrbit,
                         build_metric_axisym, circular_radius, ell_launch, precession_exact,
                         precession_perturbative)
from ..spacetime.profiles import DomainError
from . import config as C

THEORY_ERRORS = (NoBoundOrbit, NoCircularOrbit, UnstableCircularOrbit, DomainError, ValueError)


def _deg(x):
    return None if x is None or not np.isfinite(x) else float(np.degrees(x))


def _theory(profile, spec):
    """(ell, perturbative, exact) precession for a launch on a k(r) profile."""
    v = spec.params.speed
    r0, _, theta0 = _launch(spec)
    try:
        metric = build_metric_axisym(profile, v)
        rc = circular_radius(profile, v)
        ell = ell_launch(metric, r0, theta0)
        pert = precession_perturbative(profile, rc)
        exact = precession_exact(metric, ell, rc)
    except THEORY_ERRORS:
        return None, None, None
    return ell, pert, exact


def _launch(spec):
    (x, y), (vx, vy) = spec.state.position, spec.state.velocity
    r = math.hypot(x, y)
    theta = math.atan2(x * vy - y * vx, x * vx + y * vy) if r > 0 else math.nan
    return r, math.atan2(y, x), abs(theta)


def _lateral(record, i):
    """Largest distance of vehicle i from the line through its launch point."""
    p = record.positions(i)
    v = record.velocities(i)
    ok = np.all(np.isfinite(p), axis=1)
    p, u = p[ok], v[ok][0] / np.linalg.norm(v[ok][0])
    d = p - p[0]
    return float(np.max(np.abs(d[:, 0] * u[1] - d[:, 1] * u[0])))


def analyze(record, scenario, cfg):
    """Rows for analysis.csv plus a flat dict of run metrics."""
    skip = C.i(cfg, "analysis", "skip_apsides", 0)
    swing = C.f(cfg, "analysis", "min_swing", None)
    rows, metrics = [], {"n_vehicles": record.n_vehicles, "stopped_by": record.meta.get("stopped_by")}
    es, devs, lats, prec_err, shapes = [], [], [], [], []
    D = scenario.membrane.D
    for i, spec in enumerate(scenario.vehicles):
        r0, _, theta0 = _launch(spec)
        shape = analysis.orbit_shape(record, i, skip=skip, min_swing=swing)
        shapes.append(shape)
        row = {"scenario": scenario.name, "vehicle": record.labels[i], "r0": r0,
               "theta0": np.degrees(theta0), "D": D, "e": shape.eccentricity,
               "a": shape.semi_major, "prec_measured": _deg(shape.precession)}
        if scenario.terrain == "profile":
            ell, pert, exact = _theory(scenario.profile, spec)
            row.update(ell=ell, prec_perturbative=_deg(pert), prec_exact=_deg(exact))
            if exact is not None and np.isfinite(shape.precession):
                prec_err.append(abs(np.degrees(shape.precession - exact)))
        rows.append(row)
        es.append(shape.eccentricity)
        r = record.radius(i)
        r = r[np.isfinite(r)]
        devs.append(float(np.max(np.abs(r - r0)) / r0))
        if scenario.terrain == "flat":
            lats.append(_lateral(record, i))
    metrics["e_max"] = float(max(es))
    metrics["r_dev_max"] = float(max(devs))
    if lats:
        metrics["lateral_max"] = float(max(lats))
    if prec_err:
        metrics["prec_err_max_deg"] = float(max(prec_err))
    finite = [s.precession for s in shapes if np.isfinite(s.precession)]
    if finite:
        metrics["prec_mean_deg"] = float(np.degrees(np.mean(finite)))
    coll = record.first_collision()
    metrics["capture_time"] = None if coll is None else float(coll.t)
    if record.n_vehicles == 2:
        for row in rows:
            row["capture_time"] = metrics["capture_time"]
    ctrl = C.i(cfg, "analysis", "controlled", None)
    pas = C.i(cfg, "analysis", "passive", None)
    if ctrl is not None and pas is not None:
        b = margin(record, ctrl, pas)
        metrics["margin"] = b
        metrics["margin_ratio"] = b / (2 * scenario.vehicles[ctrl].params.Rv)
        rows[ctrl]["b"] = b
    if record.n_vehicles == 1 and scenario.vehicles[0].params.dB != 0:
        try:
            env = analysis.envelope_fit(record, 0)
            eps = scenario.vehicles[0].params.epsilon
            metrics["envelope_tau"] = env.tau
            metrics["tau_ratio"] = env.tau * eps / 2
        except analysis.FitError:
            pass
    if C.b(cfg, "analysis", "fit", False) and record.n_vehicles == 1:
        fit = analysis.fit_record(record, 0)
        metrics["fit_precession_deg"] = float(np.degrees(fit.precession))
        metrics["fit_tau"] = fit.tau
    return rows, metrics


# -- checks -------------------------------------------------------------------

def _lt(key):
    return lambda m, v: (m.get(key) is not None and m[key] < float(v), m.get(key))


def _gt(key):
    return lambda m, v: (m.get(key) is not None and m[key] > float(v), m.get(key))


def _capture(m, v):
    want = C._bool(v)
    return (m.get("capture_time") is not None) == want, m.get("capture_time")


def _capture_before(m, v):
    t = m.get("capture_time")
    return t is not None and t < float(v), t


def _no_capture_before(m, v):
    t = m.get("capture_time")
    return t is None or t >= float(v), t


def _decay(m, v):
    r = m.get("tau_ratio")
    return r is not None and abs(r - 1) < float(v), r


RUN_CHECKS = {
    "e_max": _lt("e_max"),
    "r_dev_max": _lt("r_dev_max"),
    "lateral_max": _lt("lateral_max"),
    "prec_tol_deg": _lt("prec_err_max_deg"),
    "margin_min": _gt("margin_ratio"),
    "decay_tol": _decay,
    "capture": _capture,
    "capture_before": _capture_before,
    "no_capture_before": _no_capture_before,
}


def _monotone(values, direction):
    pairs = list(zip(values[:-1], values[1:]))
    if direction == "decreasing":
        return all(a > b for a, b in pairs)
    if direction == "nondecreasing":
        return all(b >= a for a, b in pairs)
    raise ValueError(direction)


def _sweep_capture(table, v):
    # a run without capture counts as infinitely late
    t = [r["capture_time"] for r in table]
    if v != "decreasing":
        raise ValueError(v)
    x = [math.inf if c is None else c for c in t]
    ok = any(c is not None for c in t) and all(
        a > b or a == b == math.inf for a, b in zip(x[:-1], x[1:]))
    return ok, t


def _sweep_margin(table, v):
    b = [r.get("margin_ratio") for r in table]
    return None not in b and _monotone(b, v), b


SWEEP_CHECKS = {"capture_monotone": _sweep_capture, "margin_monotone": _sweep_margin}


def evaluate_checks(cfg, metrics=None, table=None):
    """List of (name, passed, observed, threshold) for the [check] section."""
    out = []
    for name, thr in cfg.sections.get("check", {}).items():
        if name in RUN_CHECKS:
            if metrics is None:
                continue
            ok, obs = RUN_CHECKS[name](metrics, thr)
        elif name in SWEEP_CHECKS:
            if table is None:
                continue
            ok, obs = SWEEP_CHECKS[name](table, thr)
        else:
            raise C.ConfigError("unknown check", cfg.lines.get(("check", name)), f"check.{name}")
        out.append((name, bool(ok), obs, thr))
    return out


def summary_text(scenario, record, rows, metrics, checks=()):
    lines = [f"scenario: {scenario.name or '(unnamed)'}",
             f"terrain: {scenario.terrain}, vehicles: {record.n_vehicles}, dt: {scenario.dt:g} s, "
             f"t_final: {record.meta['t_final']:.6g} s, steps: {record.meta['steps']}"]
    if metrics.get("stopped_by"):
        lines.append(f"stopped by: {metrics['stopped_by']}")
    for row in rows:
        prec = row.get("prec_measured")
        ps = "none" if prec is None else f"{prec:.4f} deg"
        lines.append(f"  {row['vehicle']}: r0={row['r0']:.4f} m, e={row['e']:.6f}, "
                     f"a={row['a']:.5f} m, precession={ps}")
        if row.get("prec_exact") is not None:
            lines.append(f"    theory: exact {row['prec_exact']:.4f} deg, "
                         f"perturbative {row['prec_perturbative']:.4f} deg")
    for key in ("e_max", "r_dev_max", "lateral_max", "prec_err_max_deg", "capture_time",
                "margin_ratio", "tau_ratio", "fit_precession_deg"):
        if key in metrics:
            val = metrics[key]
            lines.append(f"{key}: {'none' if val is None else f'{val:.6g}'}")
    for name, ok, obs, thr in checks:
        lines.append(f"check {name} ({thr}): {'PASS' if ok else 'FAIL'} (observed {obs})")
    return "\n".join(lines) + "\n"
