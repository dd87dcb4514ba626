"""Super-bath description: spectral density, occupations and coefficient functions.

Everything is dimensionless: hbar = 1, the system frequency is 1, so a bath
frequency is the ratio xi = omega / omega_0 and a time is omega_0 * t.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import quadrature
from .errors import ContractError

COEFF_TOL = 1e-12
_TINY = 1e-300


class Thermostat(str, enum.Enum):
    """How the super bath thermalises each photon mode."""

    LB = "LB"
    RF = "RF"

    @property
    def epsilons(self) -> tuple[float, float, float]:
        """Weights (eps1, eps2, eps3) of the bath drift ``[[eps3*mu, -xi], [xi + eps2*alpha, eps1*mu]]``."""
        if self is Thermostat.LB:
            return (0.5, 0.0, 0.5)
        return (1.0, 1.0, 0.0)

    @classmethod
    def parse(cls, value) -> "Thermostat":
        if isinstance(value, Thermostat):
            return value
        text = str(value).strip().upper()
        if text == "LF":
            # Alternate label for the same Redfield-form thermostat.
            text = "RF"
        try:
            return cls(text)
        except ValueError:
            raise ContractError(f"unknown thermostat {value!r}; expected LB or RF") from None


@dataclass(frozen=True)
class BathSpec:
    """Physical parameters of the system, photon bath and super bath.

    ``spectral_density`` overrides the default Ohmic form ``J(xi) = c * xi``;
    it is evaluated only on ``[0, xi_c]`` and treated as zero beyond.
    """

    thermostat: Thermostat = Thermostat.LB
    beta_hw0: float = 1.0
    xi_c: float = 2.0
    nu_bar: float = 0.1
    mu_bar_scale: float = 0.01
    ohmic_slope: float = 1.0
    spectral_density: Optional[Callable[[float], float]] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "thermostat", Thermostat.parse(self.thermostat))
        for name in ("beta_hw0", "xi_c", "ohmic_slope"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ContractError(f"{name} must be positive, got {value}")
        for name in ("nu_bar", "mu_bar_scale"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ContractError(f"{name} must be non-negative, got {value}")

    @property
    def is_ohmic(self) -> bool:
        return self.spectral_density is None

    def J(self, xi: float) -> float:
        """Spectral density with a hard cutoff at ``xi_c``."""
        if xi < 0 or xi > self.xi_c:
            return 0.0
        if self.spectral_density is None:
            return self.ohmic_slope * xi
        return float(self.spectral_density(xi))

    def replace(self, **changes) -> "BathSpec":
        values = {
            "thermostat": self.thermostat, "beta_hw0": self.beta_hw0,
            "xi_c": self.xi_c, "nu_bar": self.nu_bar,
            "mu_bar_scale": self.mu_bar_scale, "ohmic_slope": self.ohmic_slope,
            "spectral_density": self.spectral_density,
        }
        values.update(changes)
        return BathSpec(**values)

    def as_dict(self) -> dict:
        return {
            "thermostat": self.thermostat.value,
            "beta_hw0": self.beta_hw0,
            "xi_c": self.xi_c,
            "nu_bar": self.nu_bar,
            "mu_bar_scale": self.mu_bar_scale,
            "ohmic_slope": self.ohmic_slope,
            "spectral_density": "ohmic" if self.is_ohmic else "custom",
        }


@dataclass(frozen=True)
class CoefficientSet:
    """Scalar bath coefficients evaluated at the system frequency."""

    J0: float
    P0: float
    Q0: float
    S_plus: float
    S_minus: float
    R_B: float


def bose_occupation(xi, beta_hw0: float):
    """Mean occupation ``1 / (exp(beta * xi) - 1)``; ``xi`` must be positive."""
    arr = np.asarray(xi, dtype=float)
    if np.any(~(arr > 0)):
        raise ContractError("bose_occupation requires xi > 0")
    if beta_hw0 <= 0:
        raise ContractError("beta_hw0 must be positive")
    with np.errstate(over="ignore"):
        out = 1.0 / np.expm1(beta_hw0 * arr)
    return float(out) if out.ndim == 0 else out


def _occupation_or_limit(xi: float, beta_hw0: float, power: int) -> float:
    """``xi**power * N(xi)`` continued to its limit at xi = 0 (power >= 2 gives 0)."""
    if xi <= 0.0:
        return 0.0
    return xi ** power / math.expm1(beta_hw0 * xi)


def mu_bar(xi: float, spec: BathSpec) -> float:
    """Super-bath damping rate of a mode, ``mu_bar_scale * xi * J(xi)``."""
    if xi <= 0:
        raise ContractError("mu_bar requires xi > 0")
    return spec.mu_bar_scale * xi * spec.J(xi)


def _ohmic_P(xi: float, xi_c: float, slope: float) -> float:
    return slope / math.pi * (-2.0 * xi_c + xi * math.log(abs((xi + xi_c) / (xi - xi_c))))


def principal_P(xi: float, spec: BathSpec, method: str = "auto",
                tol: float = COEFF_TOL) -> float:
    """Frequency-shift function ``(1/pi) PV int_0^xi_c J(W) 2W / (xi^2 - W^2) dW``.

    ``method="auto"`` uses the closed form for the Ohmic density and quadrature
    otherwise; ``method="quadrature"`` forces the numerical route.
    """
    if xi <= 0:
        raise ContractError("principal_P requires xi > 0")
    xc = spec.xi_c
    if xi == xc:
        raise ContractError("principal_P diverges logarithmically at the cutoff")
    if method not in ("auto", "quadrature"):
        raise ContractError(f"unknown method {method!r}")
    if method == "auto" and spec.is_ohmic:
        return _ohmic_P(xi, xc, spec.ohmic_slope)

    def numerator(w: float) -> float:
        return 2.0 * w * spec.J(w) / (xi + w)

    if xi < xc:
        res = quadrature.pv_integrate(numerator, xi, 0.0, xc, tol=tol)
        return -res.value / math.pi
    res = quadrature.integrate(lambda w: numerator(w) / (xi - w), 0.0, xc, tol=tol)
    return res.value / math.pi


def principal_Q(xi: float, spec: BathSpec, tol: float = COEFF_TOL) -> float:
    """Diffusion-shift function
    ``(1/4pi) PV int_0^xi_c J(W) [1/(xi+W) + 2 xi N(W) / (xi^2 - W^2)] dW``."""
    if xi <= 0:
        raise ContractError("principal_Q requires xi > 0")
    xc = spec.xi_c
    if xi == xc:
        raise ContractError("principal_Q diverges logarithmically at the cutoff")
    beta = spec.beta_hw0

    def JN(w: float) -> float:
        w = max(w, _TINY)
        return spec.J(w) / math.expm1(beta * w)

    regular = quadrature.integrate(lambda w: spec.J(w) / (xi + w), 0.0, xc, tol=tol).value

    def numerator(w: float) -> float:
        return 2.0 * xi * JN(w) / (xi + w)

    if xi < xc:
        singular = -quadrature.pv_integrate(numerator, xi, 0.0, xc, tol=tol).value
    else:
        singular = quadrature.integrate(lambda w: numerator(w) / (xi - w), 0.0, xc, tol=tol).value
    return (regular + singular) / (4.0 * math.pi)


def _pole_at_one(numerator: Callable[[float], float], xi_c: float, tol: float) -> float:
    """``PV int_0^xi_c numerator(x) / (x - 1) dx`` for any cutoff other than 1."""
    if xi_c == 1.0:
        raise ContractError("integral diverges logarithmically when xi_c == 1")
    if xi_c > 1.0:
        return quadrature.pv_integrate(numerator, 1.0, 0.0, xi_c, tol=tol).value
    return quadrature.integrate(lambda x: numerator(x) / (x - 1.0), 0.0, xi_c, tol=tol).value


def s_plus_tilde(xi_c: float, tol: float = COEFF_TOL) -> float:
    """``PV int_0^xi_c 2 x^4 / (1 - x^2) dx``."""
    return -_pole_at_one(lambda x: 2.0 * x ** 4 / (1.0 + x), xi_c, tol)


def s_minus(xi_c: float, beta_hw0: float, tol: float = COEFF_TOL) -> float:
    """``PV int_0^xi_c 2 x^3 (2 N(x) + 1) / (1 - x^2) dx``."""

    def numerator(x: float) -> float:
        return 2.0 * (2.0 * _occupation_or_limit(x, beta_hw0, 3) + x ** 3) / (1.0 + x)

    return -_pole_at_one(numerator, xi_c, tol)


def reduction_factor(thermostat: Thermostat, J0: float, P0: float) -> float:
    """Resonant rate reduction: 1 for LB, ``J0 / sqrt(P0^2 + J0^2)`` for RF."""
    if Thermostat.parse(thermostat) is Thermostat.LB:
        return 1.0
    norm = math.hypot(P0, J0)
    if norm == 0.0:
        return 1.0
    return J0 / norm


def coefficient_set(spec: BathSpec, tol: float = COEFF_TOL) -> CoefficientSet:
    """Evaluate J, P, Q at the system frequency plus the two Redfield sums."""
    J0 = spec.J(1.0)
    P0 = principal_P(1.0, spec, tol=tol)
    Q0 = principal_Q(1.0, spec, tol=tol)
    return CoefficientSet(
        J0=J0,
        P0=P0,
        Q0=Q0,
        S_plus=s_plus_tilde(spec.xi_c, tol),
        S_minus=s_minus(spec.xi_c, spec.beta_hw0, tol),
        R_B=reduction_factor(spec.thermostat, J0, P0),
    )
