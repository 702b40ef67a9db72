import json

import numpy as np
import pytest

from membrane_orbits import experiments as X
from membrane_orbits.membrane import LoadSet, MembraneModel, vehicle_heights
from membrane_orbits.simulation import (Event, IntegrationError, Scenario, Simulation,
                                        VehicleSpec, find_apsides, run)
from membrane_orbits.spacetime import RadialProfile, circular_radius, load_bundled
from membrane_orbits.spacetime.polar import initial_state, integrate
from membrane_orbits.vehicle import HEAVY, PhysState


def _flat(state, t_end=2.0, **kw):
    return Scenario([VehicleSpec(HEAVY, state)], terrain="flat", t_end=t_end, **kw)


def test_flat_straight_line():
    s = PhysState([0.1, -0.2], [0.12, 0.16])
    rec = run(_flat(s))
    p = rec.positions(0)
    expected = s.position + np.outer(rec.t, s.velocity)
    assert np.max(np.abs(p - expected)) < 1e-12
    assert not rec.apsides(0) or all(e.kind in ("apoapsis", "periapsis") for e in rec.events)


def test_free_surface_start_on_cap_rejected():
    with pytest.raises(ValueError):
        Scenario([VehicleSpec.launch(HEAVY, 0.05)], terrain="free",
                 membrane=MembraneModel(R0=0.05, D=0.1))


def test_determinism():
    sc = X.two_body(1.3, t_end=1.0, dt=2e-3, record_every=5)
    a, b = run(sc), run(sc)
    for f in a.data:
        assert np.array_equal(a[f], b[f], equal_nan=True)
    assert [e.to_dict() for e in a.events] == [e.to_dict() for e in b.events]


def test_circular_orbit_profile():
    rec = run(X.single_orbit("D13.9", dt=2e-3, record_every=20, revolutions=5))
    rc = circular_radius(load_bundled("D13.9"), 0.309)
    assert np.max(np.abs(rec.radius(0) / rc - 1)) < 0.01
    assert rec.apsides(0) == []


def test_profile_run_matches_polar_integrator():
    prof = load_bundled("D13.9")
    sc = X.single_orbit("D13.9", r0=0.45, t_end=12.0, dt=1e-3, record_every=100)
    rec = run(sc)
    s, _ = integrate("physical", prof, initial_state(0.45, np.pi / 2, 0.309), 1e-3, 12.0,
                     v=0.309, every=100)
    xy = np.column_stack([s[:, 1] * np.cos(s[:, 2]), s[:, 1] * np.sin(s[:, 2])])
    assert np.max(np.hypot(*(rec.positions(0) - xy).T)) < 1e-5


def test_eccentric_periapsis_spacing():
    rec = run(X.single_orbit("D13.9", r0=0.45, t_end=45.0, dt=2e-3, record_every=5))
    peri = rec.events_of("periapsis", 0)
    assert len(peri) >= 2
    dphi = np.diff([e.data["phi"] for e in peri])
    assert np.all(np.abs(np.abs(dphi) - (2 * np.pi - np.pi / 3)) < 0.15 * np.pi / 3)


def test_collision_and_merge():
    p = HEAVY.with_(speed=0.2)
    a = VehicleSpec(p, PhysState([-0.15, 0.0], [0.2, 0.0]), label="a")
    b = VehicleSpec(p.with_(mass=0.25), PhysState([0.0, -0.15], [0.0, 0.2]), label="b")
    rec = run(Scenario([a, b], terrain="membrane", t_end=2.0, dt=1e-3))
    col = rec.events_of("collision")
    assert len(col) == 1 and len(rec.events_of("merge")) == 1
    tc = col[0].t
    assert 0 < tc < 1.0
    after = rec.t > tc + 0.01
    va, vb = rec.velocities(0)[after], rec.velocities(1)[after]
    assert np.allclose(va, vb, atol=1e-12)
    speed = rec.events_of("merge")[0].data["speed"]
    assert speed == pytest.approx(0.2)


def test_merge_without_merging_keeps_separate():
    p = HEAVY.with_(speed=0.2)
    a = VehicleSpec(p, PhysState([-0.15, 0.0], [0.2, 0.0]))
    b = VehicleSpec(p, PhysState([0.0, -0.15], [0.0, 0.2]))
    rec = run(Scenario([a, b], terrain="membrane", t_end=1.0, merge=False))
    assert rec.events_of("collision") and not rec.events_of("merge")


def test_merged_pair_is_deeper_than_either():
    model = MembraneModel()
    pos = np.array([[0.3, 0.0], [0.4, 0.0]])
    z_pair = vehicle_heights(model, LoadSet(pos, [0.16, 0.16]))
    z_one = vehicle_heights(model, LoadSet(pos[:1], [0.16]))
    assert np.all(z_pair < z_one[0])


def test_cap_crash():
    model = MembraneModel(R0=0.05, D=0.05)
    v = VehicleSpec.launch(HEAVY, 0.3, np.pi)  # straight inward
    rec = run(Scenario([v], membrane=model, terrain="free", t_end=5.0))
    ev = rec.events_of("cap_crash")
    assert len(ev) == 1
    assert ev[0].data["r"] <= 0.05 + HEAVY.Rv + 1e-9
    assert np.isnan(rec["x"][-1, 0]) or rec.t[-1] == pytest.approx(ev[0].t, abs=2e-3)


def test_boundary_escape():
    v = VehicleSpec.launch(HEAVY, 1.0, 0.0)  # straight outward on flat ground
    rec = run(Scenario([v], terrain="flat", t_end=5.0))
    ev = rec.events_of("boundary_escape")
    assert len(ev) == 1
    assert ev[0].t == pytest.approx((1.2 - HEAVY.Rv - 1.0) / HEAVY.speed, abs=1e-3)


def test_scenario_validation():
    with pytest.raises(ValueError):
        Scenario([VehicleSpec.launch(HEAVY, 1.18)], terrain="flat")
    with pytest.raises(ValueError):
        Scenario([VehicleSpec(HEAVY, PhysState([0.3, 0], [0.1, 0]))], terrain="flat")
    with pytest.raises(ValueError):
        Scenario([VehicleSpec.launch(HEAVY, 0.3)], terrain="profile")
    with pytest.raises(ValueError):
        Scenario([VehicleSpec.launch(HEAVY, 0.3)], dt=0)
    with pytest.raises(ValueError):
        Scenario([], terrain="flat")
    with pytest.raises(ValueError):
        Event(0.0, "bounce")


def test_integration_error_carries_record():
    prof = RadialProfile.constant(1e6, 0.0, 1.2)
    v = VehicleSpec.launch(HEAVY, 0.3, 1.0)
    sim = Simulation(Scenario([v], terrain="profile", profile=prof, t_end=100.0, dt=0.5))
    sim.vel[:] = np.nan
    with pytest.raises(IntegrationError) as exc:
        sim.run()
    assert exc.value.record is not None


def test_outputs(tmp_path):
    rec = run(X.single_orbit("D13.9", r0=0.45, t_end=20.0, dt=2e-3, record_every=50))
    rec.to_csv(tmp_path / "traj.csv")
    rec.events_to_json(tmp_path / "events.json")
    rows = (tmp_path / "traj.csv").read_text().splitlines()
    assert rows[0].startswith("t,vehicle")
    assert len(rows) == 1 + len(rec.t)
    ev = json.loads((tmp_path / "events.json").read_text())["events"]
    assert {e["kind"] for e in ev} <= {"apoapsis", "periapsis"} and ev
    assert all(0 <= e["t"] <= 20.0 for e in ev)
    assert np.all(np.diff(rec.t) > 0)


def test_find_apsides_synthetic():
    t = np.linspace(0, 20, 4001)
    r = 0.5 + 0.1 * np.cos(t)
    phi = 0.3 * t
    x, y = r * np.cos(phi), r * np.sin(phi)
    vx, vy = np.gradient(x, t), np.gradient(y, t)
    found = find_apsides(t, x, y, vx, vy)
    apo = [a for a in found if a[1] == "apoapsis"]
    assert [round(a[0], 2) for a in apo] == pytest.approx([2 * np.pi, 4 * np.pi, 6 * np.pi],
                                                          abs=0.01)


def test_richardson_and_order():
    prof = RadialProfile.polynomial([0.05, 0.15, 0.1], 0.0, 1.2)
    base = Scenario([VehicleSpec.launch(HEAVY.with_(speed=0.25), 0.35, 1.2)], terrain="profile",
                    profile=prof, t_end=8.0)
    ref = run(base.with_(dt=1.25e-3, record_every=8))
    end = lambda rec: rec.positions(0)[-1]
    errs = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        errs.append(np.hypot(*(end(run(base.with_(dt=dt, record_every=1))) - end(ref))))
    slope = np.polyfit(np.log([1e-2, 5e-3, 2.5e-3]), np.log(errs), 1)[0]
    assert 3.7 < slope < 4.5
    rec = run(base.with_(dt=5e-3), richardson=True)
    assert rec.meta["richardson"]["final_position_diff"] < 1e-6
