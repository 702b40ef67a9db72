"""Command-line entry point.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 a check
failed.  Errors are also written to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .. import __version__
from ..analysis import FitError
from ..membrane import LoadSet, vehicle_heights
from ..membrane_fd import FDSolveError, fd_vehicle_heights
from ..simulation import IntegrationError, run
from ..spacetime.metric import MetricDomainError
from ..spacetime.schwarzschild import DesignInfeasible, mapped_metric, schwarzschild_design
from . import config as C
from . import report

log = logging.getLogger("membrane_orbits")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4
NUMERIC_ERRORS = (IntegrationError, FitError, FDSolveError, MetricDomainError,
                  FloatingPointError, np.linalg.LinAlgError)


class CheckFailed(RuntimeError):
    def __init__(self, failed):
        super().__init__("failed checks: " + ", ".join(failed))
        self.failed = failed


def _out_dir(path):
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise C.ConfigError(f"output directory {out} is not writable: {exc.strerror}") from None
    return out


def _load(args):
    cfg = C.load_config(args.config)
    if args.seed is not None:
        cfg.set("membrane", "heterogeneity_seed", args.seed)
    return cfg


def _write_rows(path, rows, columns):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: "" if row.get(k) is None else row.get(k) for k in columns})


ANALYSIS_COLUMNS = ("scenario", "vehicle") + tuple(
    c for c in report.analysis.SUMMARY_COLUMNS if c != "scenario")


def run_one(cfg, out, dt=None, check=False):
    """Run one configured scenario into ``out``; returns (metrics, checks)."""
    scenario = C.scenario_from(cfg, dt)
    log.info("running %s: %d steps", scenario.name, scenario.n_steps)
    record = run(scenario)
    record.to_csv(out / "trajectory.csv")
    record.events_to_json(out / "events.json")
    rows, metrics = report.analyze(record, scenario, cfg)
    _write_rows(out / "analysis.csv", rows, ANALYSIS_COLUMNS)
    checks = report.evaluate_checks(cfg, metrics) if check else []
    (out / "summary.txt").write_text(report.summary_text(scenario, record, rows, metrics, checks))
    (out / "config.cfg").write_text(cfg.to_text())
    return metrics, checks


def _report_checks(checks):
    for name, ok, obs, thr in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: observed {obs}, threshold {thr}")
    failed = [c[0] for c in checks if not c[1]]
    if failed:
        raise CheckFailed(failed)


def cmd_run(args):
    cfg = _load(args)
    out = _out_dir(args.out)
    metrics, checks = run_one(cfg, out, args.dt, args.check)
    print((out / "summary.txt").read_text(), end="")
    _report_checks(checks)


def _sweep_task(job):
    text, out, dt = job
    cfg = C.parse_config(text)
    metrics, _ = run_one(cfg, Path(out), dt)
    return metrics


def cmd_sweep(args):
    cfg = _load(args)
    axis = C.s(cfg, "sweep", "axis")
    values = C.floats(cfg, "sweep", "values")
    if not axis or not values:
        raise C.ConfigError("[sweep] needs axis and values", cfg.lines.get(("sweep", None)),
                            "sweep")
    out = _out_dir(args.out)
    jobs = []
    for k, val in enumerate(values):
        sub = C.apply_override(cfg, axis, f"{val:g}")
        name = C.s(sub, "scenario", "name", "run")
        sub.set("scenario", "name", f"{name}_{axis.rsplit('.', 1)[1]}{val:g}")
        sub.sections.pop("sweep", None)
        C.scenario_from(sub, args.dt)  # validate every point before running any
        jobs.append((sub.to_text(), str(_out_dir(out / f"run_{k:03d}")), args.dt))
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_sweep_task, jobs))
    else:
        results = [_sweep_task(j) for j in jobs]
    table = []
    for val, m in zip(values, results):
        table.append({"value": val, **{k: m.get(k) for k in SWEEP_COLUMNS[1:]}})
    _write_rows(out / "sweep.csv", table, SWEEP_COLUMNS)
    print(f"{'value':>10} {'capture_time':>14} {'e_max':>10} {'margin_ratio':>14}")
    for row in table:
        print(f"{row['value']:>10g} {_fmt(row['capture_time']):>14} {_fmt(row['e_max']):>10} "
              f"{_fmt(row['margin_ratio']):>14}")
    if args.check:
        _report_checks(report.evaluate_checks(cfg, table=table))


SWEEP_COLUMNS = ("value", "capture_time", "e_max", "margin_ratio", "prec_mean_deg",
                 "r_dev_max", "stopped_by")


def _fmt(x):
    return "none" if x is None else f"{x:.5g}"


def cmd_reproduce(args):
    from .reproduce import FIGURES
    out = _out_dir(Path(args.out) / args.figure)
    checks = FIGURES[args.figure](out, jobs=args.jobs, dt=args.dt)
    _report_checks(checks)


def cmd_membrane_solve(args):
    cfg = _load(args)
    model = C.membrane_from(cfg)
    specs = C.vehicles_from(cfg)
    loads = LoadSet([s.state.position for s in specs], [s.params.mass for s in specs],
                    [s.params.Rv for s in specs])
    out = _out_dir(args.out)
    z = vehicle_heights(model, loads)
    rows = [{"vehicle": i, "x": p[0], "y": p[1], "z_analytic": zi}
            for i, (p, zi) in enumerate(zip(loads.positions, z))]
    if args.grid:
        zf = fd_vehicle_heights(model, loads, args.grid)
        for row, zi in zip(rows, zf):
            row["z_fd"] = zi
            row["rel_error"] = abs(zi - row["z_analytic"]) / abs(row["z_analytic"])
    cols = ["vehicle", "x", "y", "z_analytic"] + (["z_fd", "rel_error"] if args.grid else [])
    _write_rows(out / "heights.csv", rows, cols)
    for row in rows:
        print("  ".join(f"{k}={row[k]:.6g}" if k != "vehicle" else f"{k}={row[k]}" for k in cols))


def cmd_design(args):
    try:
        d = schwarzschild_design(args.M, (args.r_lo, args.r_hi), args.E)
    except DesignInfeasible as exc:
        raise C.ConfigError(str(exc), field="M/E/r_range") from None
    out = _out_dir(args.out)
    d.to_csv(out / "design.csv")
    r = np.linspace(args.r_lo, args.r_hi, 101)
    a2, f2 = mapped_metric(d, r)
    err_a = float(np.max(np.abs(a2 / d.alpha2(r) - 1)))
    err_f = float(np.max(np.abs(f2 / d.Phi2(r) - 1)))
    print(f"wrote {out / 'design.csv'} ({len(d.r)} rows)")
    print(f"max relative error of rebuilt alpha^2: {err_a:.3e}, Phi^2: {err_f:.3e}")


def build_parser():
    p = argparse.ArgumentParser(prog="membrane-orbits", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="scenario file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="heterogeneity seed override")
        sp.add_argument("--dt", type=float, default=None, help="time step override, s")
        sp.add_argument("--check", action="store_true", help="evaluate the [check] section")
        sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    sp = sub.add_parser("run", help="run one scenario")
    common(sp)
    sp.set_defaults(func=cmd_run)
    sp = sub.add_parser("sweep", help="run a scenario over the [sweep] axis")
    common(sp)
    sp.set_defaults(func=cmd_sweep)
    from .reproduce import FIGURES
    sp = sub.add_parser("reproduce", help="regenerate one figure's data and checks")
    sp.add_argument("figure", choices=sorted(FIGURES))
    common(sp, config=False)
    sp.set_defaults(func=cmd_reproduce)
    sp = sub.add_parser("membrane-solve", help="vehicle heights, optionally vs finite differences")
    common(sp)
    sp.add_argument("--grid", type=int, default=0, help="finite-difference grid size")
    sp.set_defaults(func=cmd_membrane_solve)
    sp = sub.add_parser("design-schwarzschild", help="tabulate v(r), k(r) for a Schwarzschild mass")
    sp.add_argument("--M", type=float, default=0.02)
    sp.add_argument("--E", type=float, default=0.981)
    sp.add_argument("--r-lo", type=float, default=0.2)
    sp.add_argument("--r-hi", type=float, default=1.0)
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_design)
    return p


def _fail(kind, exc, code, **extra):
    print(json.dumps({"error": kind, "message": str(exc), **extra}), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except C.ConfigError as exc:
        return _fail("config", exc, EXIT_CONFIG, line=exc.line, field=exc.field)
    except CheckFailed as exc:
        return _fail("check", exc, EXIT_CHECK, failed=exc.failed)
    except NUMERIC_ERRORS as exc:
        return _fail("numeric", exc, EXIT_NUMERIC, type=type(exc).__name__)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
