"""Reduced dynamics of a harmonic oscillator coupled to a thermostatted photon bath."""

from __future__ import annotations

from .bath import BathSpec, CoefficientSet, Thermostat, coefficient_set
from .blocks import FiniteSystem, ModeBlock, build_finite_system, mode_grid, propagate_covariance
from .density import rho_one, rho_zero
from .effective import (
    EffectiveModel,
    finite_mu_coefficients,
    kernel_at,
    limit_coefficients,
    relaxation_time,
    steady_kernel,
)
from .errors import (
    ContractError,
    ExtrapolationError,
    NumericalError,
    QuadratureError,
    ResonanceError,
    ScaleSeparationError,
    TripartiteError,
    TruncationError,
)
from .oracle import run_oracle
from .phase_space import Grid, field_fock1, field_gaussian, negativity_metrics
from .redfield import compare, redfield_coefficients

__version__ = "0.1.0"

__all__ = [
    "BathSpec", "CoefficientSet", "Thermostat", "coefficient_set",
    "FiniteSystem", "ModeBlock", "build_finite_system", "mode_grid", "propagate_covariance",
    "rho_one", "rho_zero",
    "EffectiveModel", "finite_mu_coefficients", "kernel_at", "limit_coefficients",
    "relaxation_time", "steady_kernel",
    "ContractError", "ExtrapolationError", "NumericalError", "QuadratureError",
    "ResonanceError", "ScaleSeparationError", "TripartiteError", "TruncationError",
    "run_oracle",
    "Grid", "field_fock1", "field_gaussian", "negativity_metrics",
    "compare", "redfield_coefficients",
]
