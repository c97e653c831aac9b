"""Simulation and verification toolkit for the Zakharov-Kuznetsov equation on a half-strip.

Modules
-------
weights        admissible weight functions, cut-offs and weight ladders
transverse     eigenbases of -d^2/dy^2, transforms, boundary traces and norms
operators      finite-difference stencils, evolution operators, banded solves
compatibility  compatibility stacks between initial data and inflow data
solver         Crank-Nicolson / Adams-Bashforth time stepping
diagnostics    weighted norms, energy identities, decay constants and fits
config         experiment configuration files
presets        named experiments and their report pipelines
cli            the ``zk`` command
"""
from .diagnostics import decay_params, energy_identity_residual, weighted_norm
from .operators import GridSpec
from .solver import SolverConfig, run
from .transverse import BCCase, BoundaryTrace, TransverseBasis, boundary_norm
from .weights import WeightFunction

__version__ = "0.1.0"

__all__ = [
    "BCCase",
    "BoundaryTrace",
    "GridSpec",
    "SolverConfig",
    "TransverseBasis",
    "WeightFunction",
    "boundary_norm",
    "decay_params",
    "energy_identity_residual",
    "run",
    "weighted_norm",
]
