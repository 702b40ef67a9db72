"""Scenario builders for the standard experiments.

Each builder returns a ready :class:`Scenario`, so the command line, the
reproduction harness and the tests all run the same set-ups.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .controller import TiltFeedback
from .membrane import MembraneModel, height_gradients
from .simulation import Scenario, VehicleSpec
from .spacetime import circular_radius, load_bundled
from .vehicle import HEAVY, LIGHT

# measured speeds for the three depressions, m/s
PROFILE_SPEEDS = {"D13.9": 0.309, "D9.6": 0.286, "D5.3": 0.295, "light_D17": 0.25}
PROFILE_VEHICLE = {"D13.9": HEAVY, "D9.6": HEAVY, "D5.3": HEAVY, "light_D17": LIGHT}
RETROGRADE = ("D13.9", "D9.6", "D5.3")


def profile_vehicle(name, **kw):
    return PROFILE_VEHICLE[name].with_(speed=PROFILE_SPEEDS[name], **kw)


def single_orbit(name="D13.9", r0=None, theta0=np.pi / 2, t_end=None, dt=1e-3,
                 record_every=1, revolutions=5, **vehicle_kw):
    """One vehicle on a bundled k(r) profile; launches at r_c by default."""
    prof = load_bundled(name)
    p = profile_vehicle(name, **vehicle_kw)
    rc = circular_radius(prof, p.speed)
    r0 = rc if r0 is None else r0
    if t_end is None:
        t_end = revolutions * 2 * np.pi * rc / p.speed
    return Scenario([VehicleSpec.launch(p, r0, theta0)], terrain="profile", profile=prof,
                    dt=dt, t_end=t_end, record_every=record_every, name=f"{name}_r{r0:g}")


def orbit_family(name, launches, t_end, dt=1e-3, record_every=1, membrane=None, **vehicle_kw):
    """Many non-interacting vehicles on one profile, one per (r0, theta0)."""
    prof = load_bundled(name)
    p = profile_vehicle(name, **vehicle_kw)
    vs = [VehicleSpec.launch(p, r0, th, label=f"r{r0:.4g}_th{np.degrees(th):.4g}")
          for r0, th in launches]
    return Scenario(vs, membrane=membrane or MembraneModel(), terrain="profile", profile=prof,
                    dt=dt, t_end=t_end, record_every=record_every, name=f"{name}_family")


def heterogeneity_trials(amp, n_trials=100, seed=0, name="D13.9", r0=0.45, t_end=62.0,
                         dt=2e-3, record_every=2):
    """``n_trials`` independent vehicles, each with its own fluctuation stream."""
    launches = [(r0, np.pi / 2)] * n_trials
    return orbit_family(name, launches, t_end, dt, record_every,
                        membrane=MembraneModel(heterogeneity_amp=amp, heterogeneity_seed=seed))


def decay_orbit(dB=0.006, name="D13.9", r0=0.55, t_end=75.0, dt=2e-3, record_every=5):
    sc = single_orbit(name, r0, t_end=t_end, dt=dt, record_every=record_every, dB=dB)
    sc.name = f"decay_dB{dB:g}"
    return sc


# -- two vehicles on the loaded membrane ------------------------------------

def two_body(m21=1.37, r0=0.6, psi=np.radians(45), theta0=np.pi / 2, v=0.2, m1=0.16,
             t_end=30.0, dt=1e-3, record_every=10, membrane=None):
    p1 = HEAVY.with_(mass=m1, speed=v)
    p2 = p1.with_(mass=m1 * m21)
    vs = [VehicleSpec.launch(p1, r0, theta0, 0.0, label="m1"),
          VehicleSpec.launch(p2, r0, theta0, psi, label="m2")]
    return Scenario(vs, membrane=membrane or MembraneModel(), terrain="membrane", dt=dt,
                    t_end=t_end, record_every=record_every, name=f"two_body_m21_{m21:g}")


def two_body_baseline(m21=1.37, **kw):
    """The two vehicles of :func:`two_body`, each alone on the membrane."""
    sc = two_body(m21, **kw)
    return [sc.with_(vehicles=[v], collisions=False, name=f"{sc.name}_alone_{v.label}")
            for v in sc.vehicles]


FIG6 = dict(r_ctrl=0.6, r_passive=0.4, psi=np.radians(30), m_ctrl=0.18, m_passive=0.16,
            v_passive=0.11, v0=0.15, gamma0=np.radians(15.0))


@lru_cache(maxsize=None)
def fig6_lambda(psi=FIG6["psi"], gamma0=FIG6["gamma0"]):
    """Membrane constant at which the leading vehicle starts at tilt gamma0."""
    pos = np.array([[FIG6["r_ctrl"] * np.cos(psi), FIG6["r_ctrl"] * np.sin(psi)],
                    [FIG6["r_passive"], 0.0]])
    m = np.array([FIG6["m_ctrl"], FIG6["m_passive"]])

    def tilt(lam):
        g = height_gradients(1.2, lam, 0.137, pos, m)[0]
        return np.arctan(np.hypot(*g)) - gamma0

    return brentq(tilt, 0.3, 20.0, xtol=1e-12)


def controller_pair(A, psi=FIG6["psi"], lam=None, t_end=20.0, dt=1e-3, record_every=1,
                    lag=0.0):
    """Controlled leading vehicle ahead of a slower passive one (index 1)."""
    lam = fig6_lambda(psi) if lam is None else lam
    fb = TiltFeedback(A=A, gamma0=FIG6["gamma0"], v0=FIG6["v0"], lag=lag)
    pc = HEAVY.with_(mass=FIG6["m_ctrl"], speed=FIG6["v0"])
    pp = HEAVY.with_(mass=FIG6["m_passive"], speed=FIG6["v_passive"])
    vs = [VehicleSpec.launch(pc, FIG6["r_ctrl"], np.pi / 2, psi, controller=fb, label="ctrl"),
          VehicleSpec.launch(pp, FIG6["r_passive"], np.pi / 2, 0.0, label="passive")]
    return Scenario(vs, membrane=MembraneModel(lam=lam), terrain="membrane", dt=dt,
                    t_end=t_end, record_every=record_every, merge=False,
                    name=f"controller_A{A:g}")
