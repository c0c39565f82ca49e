"""Numerical toolkit for first- and second-order distortion energies of maps
between model Riemannian manifolds.

Submodules: geometry (charts, metrics, connections), maps (map families and
profiles), distortion (principal distortion spectra), energy (quadrature and
topological bounds), euler_lagrange (criticality residual systems and the
profile minimizer), stability (second-variation forms), config and pipelines
(run configuration and named workflows), cli and service (front ends).
"""

__version__ = "1.0.0"

from .distortion import analyze_point, analyze_points, classify
from .energy import (KAPPA_CAL, TWELVE_PI2, bounds_report, degree,
                     hopf_invariant, integrate_energy, minimize_over_radius)
from .geometry import deform_metric, make_chart
from .maps import make_map, make_profile

__all__ = [
    "KAPPA_CAL", "TWELVE_PI2", "analyze_point", "analyze_points",
    "bounds_report", "classify", "deform_metric", "degree", "hopf_invariant",
    "integrate_energy", "make_chart", "make_map", "make_profile",
    "minimize_over_radius", "__version__",
]
