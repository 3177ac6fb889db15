"""Deterministic kinetic solver: exact shift transport with fast spectral and BGK collisions."""

from .bgk import BgkParams, bgk_rhs, bgk_step
from .cases import CaseConfig, build_solver, default_config, exact_bkw
from .conservation import Projector, build_projector, project
from .grid import SolidBox, SpatialGrid, VelocityGrid, build_spatial_grid, build_velocity_grid
from .macro import MacroState, compute_moments, equilibrium_project, maxwellian
from .solver import InstabilityError, Model, RunDiagnostics, Solver, compute_dt
from .spectral import (
    CollisionTables,
    SpectralConfig,
    boltzmann_step,
    evaluate_q_direct,
    evaluate_q_fast,
    precompute_tables,
)
from .transport import BoundarySchedule, DistributionState, Transport

__version__ = "0.1.0"

__all__ = [
    "BgkParams", "BoundarySchedule", "CaseConfig", "CollisionTables", "DistributionState",
    "InstabilityError", "MacroState", "Model", "Projector", "RunDiagnostics", "SolidBox",
    "Solver", "SpatialGrid", "SpectralConfig", "Transport", "VelocityGrid", "bgk_rhs",
    "bgk_step", "boltzmann_step", "build_projector", "build_solver", "build_spatial_grid",
    "build_velocity_grid", "compute_dt", "compute_moments", "default_config",
    "equilibrium_project", "evaluate_q_direct", "evaluate_q_fast", "exact_bkw", "maxwellian",
    "precompute_tables", "project",
]
