"""Gradient damage in a rock mass around a growing cavity.

Plane-strain P1 finite elements with alternate minimization of the total
energy in displacement and damage, under gravity and irreversibility. Three
bulk energies are available: isotropic degradation, degradation of the
deviatoric part only, and a shear-compression criterion.
"""

from .assembly import (
    A_MIN,
    BoundaryConditions,
    Constraints,
    DamageFunctional,
    apply_dirichlet,
    assemble_elasticity,
    build_damage_functional,
    equilibrium_residual,
)
from .config import Config, ConfigError, load_config, parse_config, save_config
from .constitutive import DamageModel, MaterialParams
from .evolution import (
    EnergyBreakdown,
    EvolutionError,
    SolverSettings,
    State,
    StepRecord,
    advance_step,
    alternate_minimization,
    energy_report,
    run,
    run_evolution,
)
from .kernels import BACKEND
from .mesh import CavitySpec, Mesh, build_mesh, carve_cavity
from .output import read_vtk, write_trace_csv, write_vtk
from .solvers import BoxConstraints, KktReport, minimize_box, solve_spd

__version__ = "0.1.0"

__all__ = [
    "A_MIN",
    "BACKEND",
    "BoundaryConditions",
    "BoxConstraints",
    "CavitySpec",
    "Config",
    "ConfigError",
    "Constraints",
    "DamageFunctional",
    "DamageModel",
    "EnergyBreakdown",
    "EvolutionError",
    "KktReport",
    "MaterialParams",
    "Mesh",
    "SolverSettings",
    "State",
    "StepRecord",
    "advance_step",
    "alternate_minimization",
    "apply_dirichlet",
    "assemble_elasticity",
    "build_damage_functional",
    "build_mesh",
    "carve_cavity",
    "energy_report",
    "equilibrium_residual",
    "load_config",
    "minimize_box",
    "parse_config",
    "read_vtk",
    "run",
    "run_evolution",
    "save_config",
    "solve_spd",
    "write_trace_csv",
    "write_vtk",
]
