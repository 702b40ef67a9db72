"""Scenario files: a flat, sectioned key = value format.

    [scenario]      name, terrain (membrane | profile | free | flat), profile,
                    dt, t_end, record_every, collisions (auto | yes | no), merge
    [membrane]      R, R0, D, lambda, sigma, heterogeneity_amp, heterogeneity_seed
    [vehicle.NAME]  preset (heavy | light), mass, mass_ratio, Rv, Lc, dB, speed,
                    r0, theta0_deg, phi0_deg, count, controller (none | tilt),
                    A, gamma0_deg, v0, v_min, v_max, lag
    [sweep]         axis = section.key, values = comma-separated list
    [check]         acceptance thresholds evaluated by ``--check``
    [analysis]      baseline (yes | no), controlled, passive, fit (yes | no)

Vehicle sections are taken in file order.  ``mass_ratio`` scales the mass
of the first vehicle; ``count`` replicates a vehicle (independent trials on a
non-interacting profile).
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..controller import TiltFeedback
from ..membrane import MembraneModel
from ..simulation import TERRAINS, Scenario, VehicleSpec
from ..spacetime.profiles import load_profile
from ..vehicle import PRESETS

SECTIONS = {
    "scenario": {"name", "terrain", "profile", "dt", "t_end", "record_every", "collisions",
                 "merge", "seed"},
    "membrane": {"R", "R0", "D", "lambda", "sigma", "heterogeneity_amp", "heterogeneity_seed"},
    "vehicle": {"preset", "mass", "mass_ratio", "Rv", "Lc", "dB", "speed", "r0", "theta0_deg",
                "phi0_deg", "count", "controller", "A", "gamma0_deg", "v0", "v_min", "v_max",
                "lag", "label"},
    "sweep": {"axis", "values"},
    "check": None,  # free-form thresholds
    "analysis": {"baseline", "controlled", "passive", "fit", "skip_apsides", "min_swing"},
}


class ConfigError(ValueError):
    def __init__(self, msg, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        super().__init__(f"{', '.join(where)}: {msg}" if where else msg)
        self.line, self.field = line, field


@dataclass
class Config:
    """Parsed scenario file: ordered sections of string values."""

    sections: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict, compare=False)

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def set(self, section, key, value):
        self.sections.setdefault(section, {})[key] = str(value)

    def vehicle_sections(self):
        return [s for s in self.sections if s.startswith("vehicle.")]

    def to_text(self):
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for name, kv in self.sections.items():
            cp[name] = kv
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def copy(self):
        return Config({k: dict(v) for k, v in self.sections.items()}, dict(self.lines))


def parse_config(text: str) -> Config:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if getattr(exc, "errors", None) else None
        raise ConfigError(f"cannot parse: {exc.message.splitlines()[0]}", line) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None)) from None
    lines = _key_lines(text)
    sections = {}
    for name in cp.sections():
        kind = name.split(".", 1)[0]
        if kind not in SECTIONS or (kind == "vehicle") != ("." in name):
            raise ConfigError(f"unknown section [{name}]", lines.get((name, None)))
        allowed = SECTIONS[kind]
        kv = dict(cp[name])
        if allowed is not None:
            for k in kv:
                if k not in allowed:
                    raise ConfigError("unknown key", lines.get((name, k)), f"{name}.{k}")
        sections[name] = kv
    if "scenario" not in sections:
        raise ConfigError("missing [scenario] section")
    return Config(sections, lines)


def bundled_scenarios():
    root = resources.files("membrane_orbits") / "data" / "scenarios"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def load_config(path) -> Config:
    """Read a scenario file; a bare bundled name such as ``circular`` also works."""
    p = Path(path)
    if not p.exists() and p.suffix in ("", ".cfg") and p.parent == Path("."):
        res = resources.files("membrane_orbits") / "data" / "scenarios" / f"{p.stem}.cfg"
        if res.is_file():
            return parse_config(res.read_text())
    try:
        with open(p) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def _key_lines(text):
    out, section = {}, None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            out[(section, None)] = n
        elif section and "=" in line and not line.startswith(("#", ";")):
            out[(section, line.split("=", 1)[0].strip())] = n
    return out


# -- typed access -------------------------------------------------------------

def _typed(cfg, section, key, conv, default):
    raw = cfg.get(section, key)
    if raw is None:
        return default
    try:
        return conv(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value {raw!r}", cfg.lines.get((section, key)),
                          f"{section}.{key}") from None


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "yes", "true", "on"):
        return True
    if v in ("0", "no", "false", "off"):
        return False
    raise ValueError(s)


def f(cfg, section, key, default=None):
    return _typed(cfg, section, key, float, default)


def i(cfg, section, key, default=None):
    return _typed(cfg, section, key, int, default)


def b(cfg, section, key, default=None):
    return _typed(cfg, section, key, _bool, default)


def s(cfg, section, key, default=None):
    return _typed(cfg, section, key, str.strip, default)


def floats(cfg, section, key):
    return _typed(cfg, section, key, lambda v: [float(t) for t in v.split(",") if t.strip()],
                  [])


# -- scenario construction ----------------------------------------------------

def membrane_from(cfg) -> MembraneModel:
    sec = "membrane"
    try:
        return MembraneModel(R=f(cfg, sec, "R", 1.2), R0=f(cfg, sec, "R0", 0.0),
                             D=f(cfg, sec, "D", 0.0), lam=f(cfg, sec, "lambda", 6.5),
                             sigma=f(cfg, sec, "sigma", 0.137),
                             heterogeneity_amp=f(cfg, sec, "heterogeneity_amp", 0.0),
                             heterogeneity_seed=i(cfg, sec, "heterogeneity_seed", 0))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), cfg.lines.get((sec, None)), sec) from None


def vehicles_from(cfg):
    out = []
    base_mass = None
    for sec in cfg.vehicle_sections():
        preset = s(cfg, sec, "preset", "heavy")
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}", cfg.lines.get((sec, "preset")),
                              f"{sec}.preset")
        p0 = PRESETS[preset]
        mass = f(cfg, sec, "mass", p0.mass)
        ratio = f(cfg, sec, "mass_ratio", None)
        if ratio is not None:
            if base_mass is None:
                raise ConfigError("mass_ratio needs an earlier vehicle",
                                  cfg.lines.get((sec, "mass_ratio")), f"{sec}.mass_ratio")
            mass = base_mass * ratio
        try:
            params = p0.with_(mass=mass, Rv=f(cfg, sec, "Rv", p0.Rv), Lc=f(cfg, sec, "Lc", p0.Lc),
                              dB=f(cfg, sec, "dB", p0.dB), speed=f(cfg, sec, "speed", p0.speed))
        except ValueError as exc:
            raise ConfigError(str(exc), cfg.lines.get((sec, None)), sec) from None
        if base_mass is None:
            base_mass = params.mass
        ctrl = None
        kind = s(cfg, sec, "controller", "none")
        if kind == "tilt":
            try:
                ctrl = TiltFeedback(A=f(cfg, sec, "A", 0.0),
                                    gamma0=np.radians(f(cfg, sec, "gamma0_deg", 15.0)),
                                    v0=f(cfg, sec, "v0", params.speed),
                                    v_min=f(cfg, sec, "v_min", 0.05),
                                    v_max=f(cfg, sec, "v_max", 0.40), lag=f(cfg, sec, "lag", 0.0))
            except ValueError as exc:
                raise ConfigError(str(exc), cfg.lines.get((sec, None)), sec) from None
        elif kind != "none":
            raise ConfigError(f"unknown controller {kind!r}", cfg.lines.get((sec, "controller")),
                              f"{sec}.controller")
        r0 = f(cfg, sec, "r0", None)
        if r0 is None:
            raise ConfigError("missing r0", cfg.lines.get((sec, None)), f"{sec}.r0")
        spec = VehicleSpec.launch(params, r0, np.radians(f(cfg, sec, "theta0_deg", 90.0)),
                                  np.radians(f(cfg, sec, "phi0_deg", 0.0)), controller=ctrl,
                                  label=s(cfg, sec, "label", sec.split(".", 1)[1]))
        count = i(cfg, sec, "count", 1)
        if count < 1:
            raise ConfigError("count must be >= 1", cfg.lines.get((sec, "count")), f"{sec}.count")
        out.extend([spec] * count)
    if not out:
        raise ConfigError("no [vehicle.*] sections")
    return out


def scenario_from(cfg: Config, dt=None) -> Scenario:
    sec = "scenario"
    terrain = s(cfg, sec, "terrain", "membrane")
    if terrain not in TERRAINS:
        raise ConfigError(f"terrain must be one of {TERRAINS}", cfg.lines.get((sec, "terrain")),
                          "scenario.terrain")
    profile = None
    if terrain == "profile":
        name = s(cfg, sec, "profile", None)
        if name is None:
            raise ConfigError("profile terrain needs a profile", cfg.lines.get((sec, None)),
                              "scenario.profile")
        try:
            profile = load_profile(name)
        except (KeyError, OSError, ValueError) as exc:
            raise ConfigError(str(exc), cfg.lines.get((sec, "profile")),
                              "scenario.profile") from None
    coll = s(cfg, sec, "collisions", "auto")
    collisions = None if coll == "auto" else b(cfg, sec, "collisions")
    try:
        return Scenario(vehicles_from(cfg), membrane=membrane_from(cfg), terrain=terrain,
                        profile=profile, dt=dt or f(cfg, sec, "dt", 1e-3),
                        t_end=f(cfg, sec, "t_end", 10.0),
                        record_every=i(cfg, sec, "record_every", 1), collisions=collisions,
                        merge=b(cfg, sec, "merge", True), name=s(cfg, sec, "name", ""))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), cfg.lines.get((sec, None)), sec) from None


def apply_override(cfg: Config, axis: str, value) -> Config:
    """Copy of ``cfg`` with ``section.key`` (section may contain a dot) set."""
    sec, _, key = axis.rpartition(".")
    if not sec or sec not in cfg.sections:
        raise ConfigError(f"sweep axis {axis!r} names no existing section")
    kind = sec.split(".", 1)[0]
    allowed = SECTIONS.get(kind)
    if allowed is not None and key not in allowed:
        raise ConfigError(f"sweep axis {axis!r} names an unknown key")
    out = cfg.copy()
    out.set(sec, key, value)
    return out
