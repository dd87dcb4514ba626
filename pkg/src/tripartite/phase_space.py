"""Quasi-probability fields of the system oscillator on a rectangular grid.

Phase-space coordinates ``r = (x, y)`` are the real and imaginary parts of
the coherent-state label.  Fields are stored as ``values[iy, ix]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from . import effective
from .effective import EffectiveModel
from .errors import ContractError, NumericalError

DEFAULT_POINTS = 401
DEFAULT_HALF_WIDTH_SIGMAS = 4.0


@dataclass(frozen=True)
class Grid:
    x: np.ndarray
    y: np.ndarray

    @classmethod
    def square(cls, half_width: float, n: int = DEFAULT_POINTS) -> "Grid":
        if half_width <= 0 or n < 3:
            raise ContractError("grid needs a positive half width and at least 3 points")
        axis = np.linspace(-half_width, half_width, n)
        return cls(axis, axis.copy())

    @classmethod
    def default_for(cls, model: EffectiveModel, n: int = DEFAULT_POINTS) -> "Grid":
        """Square grid of half width ``4 sqrt(N0)``."""
        return cls.square(DEFAULT_HALF_WIDTH_SIGMAS * math.sqrt(model.N0), n)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="xy")

    @property
    def cell_area(self) -> float:
        return float((self.x[1] - self.x[0]) * (self.y[1] - self.y[0]))

    def describe(self) -> dict:
        return {
            "x_min": float(self.x[0]), "x_max": float(self.x[-1]), "nx": int(self.x.size),
            "y_min": float(self.y[0]), "y_max": float(self.y[-1]), "ny": int(self.y.size),
        }


@dataclass(frozen=True)
class Thermal:
    label = "thermal"


@dataclass(frozen=True)
class Coherent:
    """Point initial condition at ``r0``, optionally smeared by ``Sigma0``."""

    r0: tuple[float, float]
    Sigma0: tuple[tuple[float, float], tuple[float, float]] | None = None
    label = "coherent"


@dataclass(frozen=True)
class FockOne:
    label = "fock1"


@dataclass(frozen=True)
class QuasiProbField:
    grid: Grid
    values: np.ndarray
    t: float
    init_state: object
    metadata: dict = field(default_factory=dict)

    def normalization(self) -> float:
        return integrate_grid(self.grid, self.values)


def integrate_grid(grid: Grid, values: np.ndarray) -> float:
    """Two-dimensional trapezoid rule."""
    return float(trapezoid(trapezoid(values, grid.x, axis=1), grid.y))


def _gaussian(grid: Grid, mean, A: np.ndarray) -> np.ndarray:
    X, Y = grid.mesh()
    dx, dy = X - mean[0], Y - mean[1]
    quad = A[0, 0] * dx * dx + 2.0 * A[0, 1] * dx * dy + A[1, 1] * dy * dy
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    return math.sqrt(det) / (2.0 * math.pi) * np.exp(-0.5 * quad)


def _meta(model: EffectiveModel, extra: dict) -> dict:
    meta = {"model": model.summary()}
    meta.update(extra)
    return meta


def field_fock1(model: EffectiveModel, t: float, grid: Grid | None = None) -> QuasiProbField:
    """Field evolved from the one-photon Fock state.

    ``P = sqrt(det A)/(8 pi) exp(-r.A.r/2) [4 - Tr Kh + |K^T r|^2]`` with
    ``K = A E``, ``Kh = E^T A E`` and ``E = exp(-F_eff t)``.
    """
    if not t > 0:
        raise ContractError("the Fock-state field is defined for t > 0 only")
    grid = Grid.default_for(model) if grid is None else grid
    kernel = effective.kernel_at(model, t)
    if kernel.is_delta:
        raise NumericalError("kernel is still a delta function at this time")
    A, E = kernel.A, kernel.propagator
    if not np.all(np.isfinite(A)):
        raise NumericalError("non-finite kernel")
    K = A @ E
    Kh = E.T @ A @ E
    X, Y = grid.mesh()
    bracket = (4.0 - np.trace(Kh) + (X * K[0, 0] + Y * K[1, 0]) ** 2
               + (X * K[0, 1] + Y * K[1, 1]) ** 2)
    values = 0.25 * _gaussian(grid, (0.0, 0.0), A) * bracket
    meta = _meta(model, {"trace_Kh": float(np.trace(Kh)), "A": A.tolist()})
    return QuasiProbField(grid, values, float(t), FockOne(), meta)


def origin_value_fock1(model: EffectiveModel, t: float) -> float:
    """``P(0, 0, t)`` of the Fock-state field without building a grid."""
    kernel = effective.kernel_at(model, t)
    A, E = kernel.A, kernel.propagator
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    return math.sqrt(det) / (8.0 * math.pi) * (4.0 - float(np.trace(E.T @ A @ E)))


def field_gaussian(model: EffectiveModel, t: float, init, grid: Grid | None = None) -> QuasiProbField:
    """Gaussian field from a thermal or coherent initial state."""
    grid = Grid.default_for(model) if grid is None else grid
    if isinstance(init, Thermal):
        A = effective.steady_kernel(model)
        mean = np.zeros(2)
    elif isinstance(init, Coherent):
        if t < 0:
            raise ContractError("t must be non-negative")
        kernel = effective.kernel_at(model, t)
        E = kernel.propagator
        cov = kernel.A_inv.copy() if t > 0 else np.zeros((2, 2))
        if init.Sigma0 is not None:
            S0 = np.asarray(init.Sigma0, dtype=float)
            cov = cov + E @ S0 @ E.T
        if np.linalg.det(cov) <= 0:
            raise NumericalError("covariance is singular; the field is a delta function")
        A = np.linalg.inv(cov)
        A = 0.5 * (A + A.T)
        mean = E @ np.asarray(init.r0, dtype=float)
    else:
        raise ContractError(f"unsupported initial state {init!r}")
    values = _gaussian(grid, mean, A)
    meta = _meta(model, {"mean": mean.tolist(), "A": A.tolist()})
    return QuasiProbField(grid, values, float(t), init, meta)


def negativity_metrics(field: QuasiProbField) -> tuple[float, float, float]:
    """(minimum value, integrated negative part, area where the field is negative)."""
    v = field.values
    negative = np.where(v < 0, -v, 0.0)
    mass = integrate_grid(field.grid, negative)
    area = float(np.count_nonzero(v < 0)) * field.grid.cell_area
    return float(v.min()), mass, area


def field_slice(field: QuasiProbField, y: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Values along the horizontal line ``y``, interpolated linearly between rows."""
    ys = field.grid.y
    if not ys[0] <= y <= ys[-1]:
        raise ContractError("slice lies outside the grid")
    j = int(np.searchsorted(ys, y))
    if j < ys.size and ys[j] == y:
        return field.grid.x.copy(), field.values[j].copy()
    j = max(j, 1)
    w = (y - ys[j - 1]) / (ys[j] - ys[j - 1])
    return field.grid.x.copy(), (1 - w) * field.values[j - 1] + w * field.values[j]


def fmt(value: float) -> str:
    """Shortest round-trip decimal representation of a float."""
    return repr(float(value))


def write_field_csv(field: QuasiProbField, path) -> Path:
    path = Path(path)
    X, Y = field.grid.mesh()
    lines = ["x,y,p"]
    for xv, yv, pv in zip(X.ravel(), Y.ravel(), field.values.ravel()):
        lines.append(f"{fmt(xv)},{fmt(yv)},{fmt(pv)}")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_field_json(field: QuasiProbField, path) -> Path:
    path = Path(path)
    m_min, m_mass, m_area = negativity_metrics(field)
    payload = {
        "schema_version": 1,
        "t": field.t,
        "init_state": getattr(field.init_state, "label", str(field.init_state)),
        "grid": field.grid.describe(),
        "normalization": field.normalization(),
        "min_p": m_min,
        "negative_mass": m_mass,
        "negative_area": m_area,
        "metadata": field.metadata,
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def write_slice_csv(x: np.ndarray, p: np.ndarray, path) -> Path:
    path = Path(path)
    lines = ["x,p"] + [f"{fmt(a)},{fmt(b)}" for a, b in zip(x, p)]
    path.write_text("\n".join(lines) + "\n")
    return path
