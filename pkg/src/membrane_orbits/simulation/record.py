"""Trajectory storage, queries and serialization."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .events import Event, find_apsides

FIELDS = ("x", "y", "vx", "vy", "z", "gamma", "speed", "gx", "gy")


@dataclass
class TrajectoryRecord:
    """Samples of shape (n_samples, n_vehicles) per field plus events.

    Samples after a vehicle is removed (crash or escape) are NaN.
    """

    t: np.ndarray
    data: dict
    events: list = field(default_factory=list)
    labels: list = field(default_factory=list)
    masses: np.ndarray = None
    radii: np.ndarray = None
    meta: dict = field(default_factory=dict)

    @property
    def n_vehicles(self):
        return self.data["x"].shape[1]

    def __getitem__(self, name):
        return self.data[name]

    def positions(self, i):
        return np.column_stack([self.data["x"][:, i], self.data["y"][:, i]])

    def velocities(self, i):
        return np.column_stack([self.data["vx"][:, i], self.data["vy"][:, i]])

    def radius(self, i):
        return np.hypot(self.data["x"][:, i], self.data["y"][:, i])

    def azimuth(self, i):
        """Unwrapped azimuth over the finite part of the record."""
        x, y = self.data["x"][:, i], self.data["y"][:, i]
        ok = np.isfinite(x)
        phi = np.full(len(x), np.nan)
        phi[ok] = np.unwrap(np.arctan2(y[ok], x[ok]))
        return phi

    def relative(self, i, j):
        return self.positions(i) - self.positions(j)

    def distance(self, i, j):
        d = self.relative(i, j)
        return np.hypot(d[:, 0], d[:, 1])

    def events_of(self, kind, vehicle=None):
        out = [e for e in self.events if e.kind == kind]
        if vehicle is not None:
            out = [e for e in out if vehicle in _involved(e)]
        return out

    def first_collision(self, i=None, j=None):
        for e in self.events_of("collision"):
            if i is None or {i, j} <= set(_involved(e)):
                return e
        return None

    def apsides(self, i):
        return [e for e in self.events if e.kind in ("apoapsis", "periapsis")
                and e.data.get("vehicle") == i]

    def add_apsides(self, deadband=None, min_swing=0.0):
        """Detect apsides for every vehicle and merge them into the events."""
        self.events = [e for e in self.events if e.kind not in ("apoapsis", "periapsis")]
        for i in range(self.n_vehicles):
            cols = (self.data[f][:, i] for f in ("x", "y", "vx", "vy"))
            for t, kind, r, p in find_apsides(self.t, *cols, deadband, min_swing):
                self.events.append(Event(t, kind, {"vehicle": i, "r": r, "phi": p}))
        self.events.sort(key=lambda e: e.t)

    # -- serialization ------------------------------------------------------
    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("t", "vehicle") + FIELDS)
            n = self.n_vehicles
            for k, t in enumerate(self.t):
                for i in range(n):
                    if not np.isfinite(self.data["x"][k, i]):
                        continue
                    w.writerow([repr(float(t)), i] +
                               [repr(float(self.data[f][k, i])) for f in FIELDS])

    def events_to_json(self, path):
        with open(path, "w") as fh:
            json.dump({"events": [e.to_dict() for e in self.events],
                       "meta": _jsonable(self.meta)}, fh, indent=1)


def _involved(e):
    d = e.data
    if "vehicle" in d:
        return [d["vehicle"]]
    return list(d.get("vehicles", ()))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
