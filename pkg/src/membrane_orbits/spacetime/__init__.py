"""Fiducial spacetime: metric construction, orbit structure and inverse design."""
from .metric import (AxisymMetric, GeneralMetric, MetricDomainError, NoBoundOrbit,
                     NoCircularOrbit, OrbitConstants, OrbitShape, UnstableCircularOrbit,
                     build_metric_axisym, build_metric_general, circular_radius, conserved,
                     effective_potential, ell_launch, ell_max, ell_of, orbit_shape,
                     precession_exact, precession_linear, precession_perturbative,
                     radial_cycle_azimuth, turning_points)
from .profiles import DomainError, RadialProfile, load_bundled, load_profile
from .schwarzschild import SchwarzschildDesign, schwarzschild_design

__all__ = [
    "AxisymMetric", "GeneralMetric", "MetricDomainError", "NoBoundOrbit", "NoCircularOrbit",
    "OrbitConstants", "OrbitShape", "UnstableCircularOrbit", "build_metric_axisym",
    "build_metric_general", "circular_radius", "conserved", "effective_potential",
    "ell_launch", "ell_max", "ell_of", "orbit_shape", "precession_exact", "precession_linear",
    "precession_perturbative", "radial_cycle_azimuth", "turning_points", "DomainError",
    "RadialProfile", "load_bundled", "load_profile", "SchwarzschildDesign",
    "schwarzschild_design",
]
