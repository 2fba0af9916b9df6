"""Deterministic 2D marble-sulphation simulator with surface rugosity."""

__version__ = "0.1.0"

from .bulk import FieldState, LinearSystem, assemble_s_system, c_update_exact, cg_solve, step
from .config import ConfigError, RunConfig, parse_config
from .grid import BoundaryTrace, Edge, EdgeTag, Grid2D, ProfileLine, build_grid, extract_profile
from .model import (
    ConstitutiveReport,
    ConstraintMode,
    NuLaw,
    PhysParams,
    PsiPolynomial,
    constitutive_report,
    permeability,
    porosity,
    project_box,
    rugosity_reaction,
    rugosity_reaction_potential,
)
from .runner import RunResult, run, sweep
from .surface import RugosityInit, RugosityInitMode, init_rugosity, step_r, weibull_sample

__all__ = [
    "__version__",
    "BoundaryTrace",
    "ConfigError",
    "ConstitutiveReport",
    "ConstraintMode",
    "Edge",
    "EdgeTag",
    "FieldState",
    "Grid2D",
    "LinearSystem",
    "NuLaw",
    "PhysParams",
    "ProfileLine",
    "PsiPolynomial",
    "RugosityInit",
    "RugosityInitMode",
    "RunConfig",
    "RunResult",
    "assemble_s_system",
    "build_grid",
    "c_update_exact",
    "cg_solve",
    "constitutive_report",
    "extract_profile",
    "init_rugosity",
    "parse_config",
    "permeability",
    "porosity",
    "project_box",
    "rugosity_reaction",
    "rugosity_reaction_potential",
    "run",
    "step",
    "step_r",
    "sweep",
    "weibull_sample",
]
