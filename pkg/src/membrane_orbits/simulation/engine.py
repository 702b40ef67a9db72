"""Fixed-step RK4 time stepping of vehicles on a quasi-static terrain.

Each step the engine

1. reads the tilt under every controlled vehicle and sets its speed,
2. renormalizes velocities to the commanded speeds,
3. advances positions and velocities with one RK4 step, re-solving the
   terrain at every stage,
4. renormalizes again and checks for collisions, cap crashes and escapes.

Apsides are found after the run from the recorded samples.
"""
from __future__ import annotations

import logging

import numpy as np

from ..controller import TiltSensor, commanded_speed
from ..membrane import Heterogeneity
from ..vehicle import epsilon, mechanical_constant
from .events import Event
from .record import FIELDS, TrajectoryRecord
from .scenario import Scenario
from .terrain import FlatTerrain, FreeSurfaceTerrain, MembraneTerrain, ProfileTerrain

log = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    """Non-finite state; ``record`` holds the samples up to the last good step."""

    def __init__(self, msg, record=None):
        super().__init__(msg)
        self.record = record


def build_terrain(sc: Scenario):
    vp = [v.params for v in sc.vehicles]
    m = sc.membrane
    if sc.terrain == "membrane":
        return MembraneTerrain(m, [p.mass for p in vp], [p.Rv for p in vp])
    if sc.terrain == "profile":
        cg = [mechanical_constant(p) * p.g for p in vp]
        return ProfileTerrain(sc.profile, cg, R=m.R, R0=m.R0)
    if sc.terrain == "free":
        return FreeSurfaceTerrain(m)
    return FlatTerrain(m.R)


class Simulation:
    def __init__(self, scenario: Scenario):
        self.sc = sc = scenario
        vs = sc.vehicles
        self.n = n = len(vs)
        self.mass = np.array([v.params.mass for v in vs])
        self.Rv = np.array([v.params.Rv for v in vs])
        self.cg = np.array([mechanical_constant(v.params) * v.params.g for v in vs])
        self.eps = np.array([epsilon(v.params) for v in vs])
        self.pos = np.array([v.state.position for v in vs], dtype=float)
        self.vel = np.array([v.state.velocity for v in vs], dtype=float)
        self.v_own = np.array([v.controller.v0 if v.controller else v.params.speed
                               for v in vs])
        self.v_cmd = self.v_own.copy()
        self.controllers = [v.controller for v in vs]
        self.sensors = [TiltSensor(c.lag) if c else None for c in self.controllers]
        self.active = np.ones(n, dtype=bool)
        self.removed_now = np.zeros(n, dtype=bool)
        self.group = np.arange(n)
        self.any_merged = False
        self.terrain = build_terrain(sc)
        self.r_crash, self.r_escape = self.terrain.limits(self.Rv)
        self.het = Heterogeneity(sc.membrane.heterogeneity_amp, sc.membrane.heterogeneity_seed)
        self.arc = np.zeros(n)
        self.arc_idx = np.zeros(n, dtype=np.int64)
        self.het_f = np.atleast_1d(self.het.factor(self.arc_idx, np.arange(n))).astype(float)
        self.t = 0.0
        self.t_prev = 0.0
        self.n_done = 0
        self.z, self.grad = self.terrain.evaluate(self.pos)
        self.events: list[Event] = []
        self.max_drift = 0.0
        self.stopped_by = None

    # -- dynamics -----------------------------------------------------------
    def _merged(self):
        return self.any_merged

    def _group_mean(self, a):
        """Replace per-vehicle rows by mass-weighted group means."""
        out = a.copy()
        for g in np.unique(self.group):
            idx = np.nonzero(self.group == g)[0]
            if len(idx) > 1:
                w = self.mass[idx] / self.mass[idx].sum()
                out[idx] = np.tensordot(w, a[idx], axes=1)
        return out

    def accel(self, vel, grad):
        v2 = np.einsum("ij,ij->i", vel, vel)
        v2 = np.where(v2 > 0, v2, 1.0)
        dx, dy = -grad[:, 0], -grad[:, 1]
        cross = dx * vel[:, 1] - dy * vel[:, 0]
        dot = dx * vel[:, 0] + dy * vel[:, 1]
        s = self.cg * self.het_f * (cross + self.eps * dot) / v2
        a = np.empty_like(vel)
        a[:, 0] = s * vel[:, 1]
        a[:, 1] = -s * vel[:, 0]
        a[~self.active] = 0.0
        return self._group_mean(a) if self._merged() else a

    def _set_speeds(self):
        gamma = np.arctan(np.hypot(self.grad[:, 0], self.grad[:, 1]))
        for i, c in enumerate(self.controllers):
            if c is not None and self.active[i]:
                self.v_own[i] = commanded_speed(c, self.sensors[i].update(gamma[i], self.sc.dt))
        v = self.v_own
        if self._merged():
            v = self._group_mean(self.v_own[:, None])[:, 0]
        self.v_cmd = np.where(self.active, v, 0.0)

    def _renormalize(self, vel):
        s = np.hypot(vel[:, 0], vel[:, 1])
        act = self.active & (s > 0)
        if np.any(act):
            drift = np.abs(s[act] - self.v_cmd[act]) / self.v_cmd[act]
            self.max_drift = max(self.max_drift, float(drift.max()))
        scale = np.where(act, self.v_cmd / np.where(s > 0, s, 1.0), 0.0)
        return vel * scale[:, None]

    def step(self):
        dt, h = self.sc.dt, 0.5 * self.sc.dt
        self.removed_now[:] = False
        self._set_speeds()
        drift0 = self.max_drift
        pos, vel = self.pos, self._renormalize(self.vel)
        self.max_drift = drift0  # controller speed changes are not drift
        ev = self.terrain.evaluate
        a1 = self.accel(vel, self.grad)
        p2, v2 = pos + h * vel, vel + h * a1
        a2 = self.accel(v2, ev(p2, False)[1])
        p3, v3 = pos + h * v2, vel + h * a2
        a3 = self.accel(v3, ev(p3, False)[1])
        p4, v4 = pos + dt * v3, vel + dt * a3
        a4 = self.accel(v4, ev(p4, False)[1])
        new_pos = pos + dt / 6 * (vel + 2 * v2 + 2 * v3 + v4)
        new_vel = vel + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        if not (np.all(np.isfinite(new_pos)) and np.all(np.isfinite(new_vel))):
            raise IntegrationError(f"non-finite state after t = {self.t:.6g} s")
        prev_pos = self.pos
        self.pos, self.vel = new_pos, self._renormalize(new_vel)
        self.n_done += 1
        self.t_prev, self.t = self.t, self.n_done * dt
        self._advance_arc(dt)
        self.z, self.grad = ev(self.pos)
        self._detect(prev_pos)

    def _advance_arc(self, dt):
        if self.het.amp == 0:
            return
        self.arc += self.v_cmd * dt
        idx = np.floor(self.arc / self.Rv).astype(np.int64)
        changed = np.nonzero(idx != self.arc_idx)[0]
        if len(changed):
            self.arc_idx[changed] = idx[changed]
            self.het_f[changed] = self.het.factor(idx[changed], changed)

    # -- events -------------------------------------------------------------
    def _tcross(self, f0, f1, level):
        """Time where a quantity moving linearly from f0 to f1 hits ``level``."""
        den = f1 - f0
        u = 1.0 if den == 0 else float(np.clip((level - f0) / den, 0.0, 1.0))
        return self.t_prev + u * (self.t - self.t_prev)

    def _detect(self, prev_pos):
        if self.sc.collisions and self.n > 1:
            self._detect_collisions(prev_pos)
        r0 = np.hypot(prev_pos[:, 0], prev_pos[:, 1])
        r1 = np.hypot(self.pos[:, 0], self.pos[:, 1])
        for i in np.nonzero(self.active)[0]:
            if not self.active[i]:
                continue
            if self.r_crash[i] > 0 and r1[i] <= self.r_crash[i]:
                self._terminal(i, "cap_crash", self._tcross(r0[i], r1[i], self.r_crash[i]), r1[i])
            elif r1[i] >= self.r_escape[i]:
                self._terminal(i, "boundary_escape",
                               self._tcross(r0[i], r1[i], self.r_escape[i]), r1[i])

    def _terminal(self, i, kind, t, r):
        self.events.append(Event(t, kind, {"vehicle": int(i), "r": float(r)}))
        members = np.nonzero(self.group == self.group[i])[0]
        self.active[members] = False
        self.removed_now[members] = True
        if self.terrain.interacting:
            self.stopped_by = kind

    def _detect_collisions(self, prev_pos):
        n = self.n
        for i in range(n):
            for j in range(i + 1, n):
                if not (self.active[i] and self.active[j]) or self.group[i] == self.group[j]:
                    continue
                contact = self.Rv[i] + self.Rv[j]
                d1 = float(np.hypot(*(self.pos[i] - self.pos[j])))
                if d1 > contact:
                    continue
                d0 = float(np.hypot(*(prev_pos[i] - prev_pos[j])))
                t = self._tcross(d0, d1, contact)
                self.events.append(Event(t, "collision", {"vehicles": [i, j], "distance": d1}))
                if self.sc.merge:
                    self._merge(i, j, t)

    def _merge(self, i, j, t):
        gi, gj = self.group[i], self.group[j]
        self.group[self.group == gj] = gi
        self.any_merged = True
        idx = np.nonzero(self.group == gi)[0]
        w = self.mass[idx] / self.mass[idx].sum()
        v_mean = w @ self.vel[idx]
        speed = float(w @ self.v_own[idx])
        s = np.hypot(*v_mean)
        direction = v_mean / s if s > 0 else self.vel[i] / np.hypot(*self.vel[i])
        self.vel[idx] = speed * direction
        self.v_cmd[idx] = speed
        self.events.append(Event(t, "merge", {"vehicles": [int(k) for k in idx],
                                              "speed": speed}))

    # -- main loop ----------------------------------------------------------
    def run(self) -> TrajectoryRecord:
        sc = self.sc
        nsteps, every = sc.n_steps, sc.record_every
        nrec = nsteps // every + 2
        t = np.empty(nrec)
        data = {f: np.full((nrec, self.n), np.nan) for f in FIELDS}
        k = 0
        self._store(t, data, k)
        k += 1
        step = 0
        try:
            while step < nsteps:
                self.step()
                step += 1
                done = self.stopped_by is not None or not np.any(self.active)
                if step % every == 0 or done or step == nsteps:
                    self._store(t, data, k)
                    k += 1
                if done:
                    break
        except IntegrationError as exc:
            exc.record = self._finish(t[:k], {f: a[:k] for f, a in data.items()}, step)
            raise
        return self._finish(t[:k], {f: a[:k] for f, a in data.items()}, step)

    def _store(self, t, data, k):
        t[k] = self.t
        # a vehicle removed at this instant keeps its final sample
        live = self.active | self.removed_now
        g = self.grad
        cols = dict(x=self.pos[:, 0], y=self.pos[:, 1], vx=self.vel[:, 0], vy=self.vel[:, 1],
                    z=self.z, gamma=np.arctan(np.hypot(g[:, 0], g[:, 1])),
                    speed=np.hypot(self.vel[:, 0], self.vel[:, 1]), gx=g[:, 0], gy=g[:, 1])
        for f in FIELDS:
            data[f][k] = np.where(live, cols[f], np.nan)

    def _finish(self, t, data, steps):
        rec = TrajectoryRecord(
            t=t, data=data, events=sorted(self.events, key=lambda e: e.t),
            labels=[v.label or f"v{i}" for i, v in enumerate(self.sc.vehicles)],
            masses=self.mass.copy(), radii=self.Rv.copy(),
            meta={"dt": self.sc.dt, "steps": steps, "t_final": self.t,
                  "max_speed_drift": self.max_drift, "stopped_by": self.stopped_by,
                  "scenario": self.sc.name})
        rec.add_apsides()
        return rec


def run(scenario: Scenario, richardson: bool = False) -> TrajectoryRecord:
    """Integrate a scenario; optionally rerun at dt/2 to estimate the error."""
    rec = Simulation(scenario).run()
    if richardson:
        half = scenario.with_(dt=scenario.dt / 2, record_every=2 * scenario.record_every)
        fine = Simulation(half).run()
        n = min(len(rec.t), len(fine.t))
        a = np.stack([rec["x"][n - 1], rec["y"][n - 1]], 1)
        b = np.stack([fine["x"][n - 1], fine["y"][n - 1]], 1)
        diff = float(np.nanmax(np.hypot(*(a - b).T)))
        rec.meta["richardson"] = {"final_position_diff": diff, "error_estimate": diff * 16 / 15}
    return rec


def step(sim: Simulation):
    """Advance a live simulation by one step."""
    sim.step()
    return sim
