"""Pseudo-spectral Navier-Stokes with nonlinear absorption on the periodic square.

The library integrates ``u_t - nu Lap u + (u.grad)u + alpha |u|^(sigma-2) u + grad p = f``
and checks trajectories against closed-form energy bounds.
"""

__version__ = "0.1.0"

from .spectral import SpectralField, TorusGrid, energy, leray_project
from .series import EnergySeries
from .solver import (
    BoundedConstant,
    Modes,
    RandomDivFree,
    SimConfig,
    SolverDivergenceError,
    TaylorGreen,
    VanishingPower,
    ZeroForcing,
    run,
    step,
)
from .theory import build_theory_report
from .config import ConfigError, parse_config
from .manifest import RunManifest

__all__ = [
    "SpectralField", "TorusGrid", "energy", "leray_project", "EnergySeries", "BoundedConstant", "Modes",
    "RandomDivFree", "SimConfig", "SolverDivergenceError", "TaylorGreen", "VanishingPower", "ZeroForcing",
    "run", "step", "build_theory_report", "ConfigError", "parse_config", "RunManifest",
]
