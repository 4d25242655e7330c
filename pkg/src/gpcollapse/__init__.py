"""Desk-scale laboratory for collapsing rotating attractive condensates.

Grid, profile, energies, minimizer, and collapse scans; see the README
for the command-line front end and the acceptance suite.
"""

from .functional import EnergyBreakdown, GPParams, InteractionSpec
from .grid import ComplexField, SpectralGrid
from .minimizer import SolveConfig, SolveReport, minimize, phase_align
from .profile import GNConstants, RadialProfile, compute_constants, solve_profile

__all__ = [
    "ComplexField",
    "EnergyBreakdown",
    "GNConstants",
    "GPParams",
    "InteractionSpec",
    "RadialProfile",
    "SolveConfig",
    "SolveReport",
    "SpectralGrid",
    "compute_constants",
    "minimize",
    "phase_align",
    "solve_profile",
]

__version__ = "0.1.0"
