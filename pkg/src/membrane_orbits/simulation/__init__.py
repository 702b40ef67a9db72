"""Multi-vehicle time stepping on membrane and profile terrains."""
from .engine import IntegrationError, Simulation, build_terrain, run, step
from .events import KINDS, TERMINAL, Event, find_apsides
from .record import FIELDS, TrajectoryRecord
from .scenario import TERRAINS, Scenario, VehicleSpec

__all__ = ["IntegrationError", "Simulation", "build_terrain", "run", "step", "KINDS",
           "TERMINAL", "Event", "find_apsides", "FIELDS", "TrajectoryRecord", "TERRAINS",
           "Scenario", "VehicleSpec"]
