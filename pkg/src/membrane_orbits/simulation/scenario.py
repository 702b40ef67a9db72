"""Declarative description of a simulation run."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..controller import TiltFeedback
from ..membrane import MembraneModel
from ..spacetime.profiles import RadialProfile
from ..vehicle import PhysState, VehicleParams

TERRAINS = ("membrane", "profile", "free", "flat")


@dataclass
class VehicleSpec:
    params: VehicleParams
    state: PhysState
    controller: TiltFeedback | None = None
    label: str = ""

    @classmethod
    def launch(cls, params, r0, theta0=np.pi / 2, phi0=0.0, controller=None, label=""):
        speed = controller.v0 if controller is not None else params.speed
        return cls(params, PhysState.from_polar(r0, phi0, theta0, speed), controller, label)


@dataclass
class Scenario:
    """Vehicles on one terrain, integrated with fixed-step RK4.

    ``terrain`` selects how heights are computed: ``"membrane"`` (vehicles
    load the membrane and interact), ``"profile"`` (a given k(r) table, no
    interaction), ``"free"`` (unloaded capped membrane) or ``"flat"``.
    ``collisions`` defaults to on for interacting terrain only.
    """

    vehicles: list
    membrane: MembraneModel = field(default_factory=MembraneModel)
    terrain: str = "membrane"
    profile: RadialProfile | None = None
    dt: float = 1e-3
    t_end: float = 10.0
    record_every: int = 1
    collisions: bool | None = None
    merge: bool = True
    name: str = ""

    def __post_init__(self):
        if self.terrain not in TERRAINS:
            raise ValueError(f"terrain must be one of {TERRAINS}")
        if self.terrain == "profile" and self.profile is None:
            raise ValueError("profile terrain needs a k(r) profile")
        if not self.vehicles:
            raise ValueError("scenario has no vehicles")
        if self.dt <= 0 or self.t_end <= 0 or self.record_every < 1:
            raise ValueError("dt and t_end must be positive, record_every >= 1")
        if self.collisions is None:
            self.collisions = self.terrain == "membrane" and len(self.vehicles) > 1
        R, R0 = self.membrane.R, self.membrane.R0
        for v in self.vehicles:
            r = v.state.r
            if not r < R - v.params.Rv:
                raise ValueError(f"vehicle {v.label!r} starts outside the disk")
            if R0 > 0 and not r > R0 + v.params.Rv:
                raise ValueError(f"vehicle {v.label!r} starts on the cap")
            want = v.controller.v0 if v.controller is not None else v.params.speed
            if abs(v.state.speed - want) > 1e-9 * want:
                raise ValueError(f"vehicle {v.label!r} initial speed differs from commanded")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    def with_(self, **kw):
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return Scenario(**d)
