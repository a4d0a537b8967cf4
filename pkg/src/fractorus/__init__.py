"""Spectral Fourier-Galerkin solver for time-fractional, space-fractional
Fokker-Planck equations on the torus, with numerical audits of its estimates."""

from .fracops import TimeGrid, ml, ml_matrix, solve_linear_fode
from .galerkin import ProblemSpec, Trajectory, assemble, evaluate, mass_drift, solve, solve_ml, solve_stepping
from .spectral import Lattice, SpectralField, analyze, lattice_new, project, synthesize

__all__ = [
    "Lattice",
    "ProblemSpec",
    "SpectralField",
    "TimeGrid",
    "Trajectory",
    "analyze",
    "assemble",
    "evaluate",
    "lattice_new",
    "mass_drift",
    "ml",
    "ml_matrix",
    "project",
    "solve",
    "solve_linear_fode",
    "solve_ml",
    "solve_stepping",
    "synthesize",
]
