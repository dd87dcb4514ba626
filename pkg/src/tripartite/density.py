"""Steady-state density matrix of the system in a truncated Fock basis.

The zeroth order is the thermal state.  The first-order correction follows
from expanding the steady Gaussian P-function,
``A(inf) = diag((2/N0)(1 + C nu), 2/N0)``, to linear order in ``nu`` and
mapping the resulting polynomial-times-Gaussian back to operators:

    rho1 = -rho0 (C nu / 4 N0) e^{-2b} (a a + e^{2b} ad ad + 2 e^{b} (ad a + 1) - 2 N0 e^{2b})

which is traceless and has entries only on the diagonals 0 and +-2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .effective import N0_FLOOR, EffectiveModel
from .errors import ContractError, TruncationError

TRUNCATION_TOL = 1e-9


@dataclass(frozen=True)
class FockDensity:
    dim: int
    elements: np.ndarray
    order: int

    def trace(self) -> float:
        return math.fsum(np.diag(self.elements))

    def to_json(self) -> dict:
        entries = [
            [int(i), int(j), float(self.elements[i, j])]
            for i, j in zip(*np.nonzero(self.elements))
        ]
        return {"schema_version": 1, "dim": self.dim, "order": self.order, "entries": entries}


def suggested_n_max(beta_hw0: float, tol: float = TRUNCATION_TOL) -> int:
    """Smallest cutoff meeting both ``20/beta + 20`` and a tail below ``tol``."""
    rule = math.ceil(20.0 / beta_hw0 + 20.0)
    tail = math.ceil(-math.log(tol) / beta_hw0)
    return max(rule, tail)


def annihilation(n_max: int) -> np.ndarray:
    """Ladder operator ``a`` on the levels 0..n_max."""
    return np.diag(np.sqrt(np.arange(1.0, n_max + 1.0)), k=1)


def boltzmann_weights(beta_hw0: float, n_max: int) -> np.ndarray:
    """``(1 - e^-b) e^{-b n}`` for n = 0..n_max."""
    n = np.arange(n_max + 1, dtype=float)
    return -math.expm1(-beta_hw0) * np.exp(-beta_hw0 * n)


def rho_zero(beta_hw0: float, n_max: int = 60) -> FockDensity:
    if beta_hw0 <= 0:
        raise ContractError("beta_hw0 must be positive")
    if n_max < 1:
        raise ContractError("n_max must be at least 1")
    return FockDensity(n_max + 1, np.diag(boltzmann_weights(beta_hw0, n_max)), 0)


def rho_one(model: EffectiveModel, n_max: int = 60, tol: float = TRUNCATION_TOL) -> FockDensity:
    """First-order steady correction built from exact ladder-operator products."""
    if model.N0 <= N0_FLOOR:
        raise ContractError("first-order correction is unreliable for N0 below 1e-6")
    if n_max < 2:
        raise ContractError("n_max must be at least 2")
    beta = model.spec.beta_hw0 if model.spec is not None else math.log1p(1.0 / model.N0)
    if math.exp(-beta * (n_max + 1)) > tol:
        need = suggested_n_max(beta, tol)
        raise TruncationError(f"n_max={n_max} leaves a thermal tail above {tol:g}; use n_max >= {need}", need)
    a = annihilation(n_max)
    ad = a.T
    rho0 = np.diag(boltzmann_weights(beta, n_max))
    eb = math.exp(beta)
    N0 = model.N0
    op = a @ a + eb * eb * (ad @ ad) + 2.0 * eb * (ad @ a + np.eye(n_max + 1)) \
        - 2.0 * N0 * eb * eb * np.eye(n_max + 1)
    prefactor = -model.C * model.nu_bar / (4.0 * N0) * math.exp(-2.0 * beta)
    rho1 = prefactor * (rho0 @ op)
    rho1 = 0.5 * (rho1 + rho1.T)
    return FockDensity(n_max + 1, rho1, 1)


def steady_density(model: EffectiveModel, n_max: int = 60) -> np.ndarray:
    beta = model.spec.beta_hw0
    return rho_zero(beta, n_max).elements + rho_one(model, n_max).elements


def write_density_json(rho: FockDensity, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(rho.to_json(), indent=2, sort_keys=True) + "\n")
    return path
