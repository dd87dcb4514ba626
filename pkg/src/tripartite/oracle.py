"""Brute-force check of the marginal dynamics against the full composite model.

The composite Ornstein-Uhlenbeck process is propagated directly and its
system block is compared with the Gaussian kernel of the effective model
obtained by eliminating the same modes.  A second check extracts the system
relaxation rate from the full spectrum over a damping schedule and
extrapolates it to vanishing damping.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import bath, blocks, effective
from .bath import BathSpec
from .errors import ContractError, ScaleSeparationError

DEFAULT_N_MODES = 64
DEFAULT_DT = 0.05
DEFAULT_T_FACTORS = (0.5, 1.0, 2.0)
SEPARATION_LIMIT = 0.5
# Fallback time unit when the system is uncoupled and tau_S is infinite.
UNCOUPLED_TIME_UNIT = 100.0


@dataclass(frozen=True)
class ScaleSeparation:
    """Dimensionless measures of the coupling hierarchy.

    ``kappa`` is the largest ratio of a mode coupling to its distance from
    resonance (linewidth plus detuning); ``sigma`` compares the bare system
    relaxation rate ``nu/6`` with the resonant bath linewidth.  Both must be
    small for the elimination of the bath to be accurate.
    """

    kappa: float
    sigma: float

    def violated(self, limit: float = SEPARATION_LIMIT) -> bool:
        return self.kappa > limit or self.sigma > limit


@dataclass(frozen=True)
class OracleReport:
    n_modes: int
    thermostat: str
    nu_bar: float
    mu_bar_scale: float
    dt: float
    kappa: float
    sigma: float
    tau_S: float
    times: list
    covariance_deviation: list
    mean_deviation: list
    max_deviation: float
    mode_rate_deviation: float
    mu_schedule: list
    rates: list
    extrapolated_rate: float
    extrapolation_residual: float
    f1_extrapolated: float
    f1_expected: float
    f1_deviation: float

    def as_dict(self) -> dict:
        out = asdict(self)
        out["schema_version"] = 1
        return out


def scale_separation(system: blocks.FiniteSystem) -> ScaleSeparation:
    if system.spec is None:
        raise ContractError("the finite system carries no BathSpec")
    kappa = 0.0
    for mode in system.modes:
        gap = 0.5 * mode.mu + abs(mode.omega - 1.0)
        if mode.gamma > 0:
            kappa = max(kappa, mode.gamma / gap if gap > 0 else math.inf)
    width = bath.mu_bar(1.0, system.spec)
    rate = system.spec.nu_bar / 6.0
    sigma = rate / width if width > 0 else (math.inf if rate > 0 else 0.0)
    return ScaleSeparation(kappa=kappa, sigma=sigma)


def check_scale_separation(system: blocks.FiniteSystem, limit: float = SEPARATION_LIMIT) -> ScaleSeparation:
    sep = scale_separation(system)
    if sep.violated(limit):
        raise ScaleSeparationError(
            f"scale separation violated: kappa={sep.kappa:.3g}, sigma={sep.sigma:.3g} "
            f"(both must be <= {limit:g}); lower nu_bar or raise mu_bar_scale")
    return sep


def _relative(a: np.ndarray, ref: np.ndarray) -> float:
    scale = float(np.linalg.norm(ref))
    diff = float(np.linalg.norm(np.asarray(a) - np.asarray(ref)))
    return diff / scale if scale > 0 else diff


def _relative_scalar(a: float, ref: float) -> float:
    return abs(a - ref) / abs(ref) if ref != 0 else abs(a - ref)


def extrapolated_rate(spec: BathSpec, n_modes: int, mu_schedule) -> tuple[list, float, float]:
    """System relaxation rate ``2 Re lambda_0`` per damping scale and its limit."""
    rates = []
    for mu in mu_schedule:
        scaled = spec.replace(mu_bar_scale=float(mu))
        system = blocks.build_finite_system(scaled, blocks.mode_grid(scaled, n_modes))
        check_scale_separation(system)
        rates.append(blocks.spectrum_and_rates(system).tau_S_inv)
    value, residual = effective.richardson(mu_schedule, rates)
    return rates, value, residual


def run_oracle(spec: BathSpec, n_modes: int = DEFAULT_N_MODES,
               mu_schedule=effective.DEFAULT_MU_SCHEDULE, t_factors=DEFAULT_T_FACTORS,
               r0=(1.0, 0.0), dt: float = DEFAULT_DT) -> OracleReport:
    """Propagate the full model at ``spec.mu_bar_scale`` and extrapolate the rate.

    Raises ScaleSeparationError before any propagation when the coupling
    hierarchy does not hold for the propagated system or any schedule entry.
    """
    if n_modes < 8:
        raise ContractError("the oracle needs at least 8 modes")
    if spec.xi_c <= 1.0:
        raise ContractError("the oracle needs xi_c > 1 so that the resonance lies inside the bath")
    mus = [float(m) for m in mu_schedule]
    if len(mus) < 2 or any(b >= a for a, b in zip(mus, mus[1:])) or mus[-1] <= 0:
        raise ContractError("mu_schedule must be strictly decreasing positive values (at least two)")
    system = blocks.build_finite_system(spec, blocks.mode_grid(spec, n_modes))
    sep = check_scale_separation(system)
    for mu in mus:
        scaled = spec.replace(mu_bar_scale=mu)
        check_scale_separation(blocks.build_finite_system(scaled, blocks.mode_grid(scaled, n_modes)))

    model = blocks.effective_model(system)
    tau = effective.relaxation_time(model)
    unit = tau if math.isfinite(tau) else UNCOUPLED_TIME_UNIT
    times = [float(k) * unit for k in t_factors]
    Sigma0, mean0 = blocks.initial_moments(system, r0)
    covs, means = blocks.propagate_moments(system.F, system.D, Sigma0, mean0, times, dt)
    r0 = np.asarray(r0, dtype=float)
    cov_dev, mean_dev = [], []
    for t, cov, mean in zip(times, covs, means):
        kernel = effective.kernel_at(model, t)
        cov_dev.append(_relative(cov[:2, :2], kernel.A_inv))
        mean_dev.append(_relative(mean[:2], kernel.propagator @ r0))

    spectrum = blocks.spectrum_and_rates(system)
    mode_mu = np.array([m.mu for m in system.modes])
    mode_dev = float(np.max(np.abs(spectrum.tau_B_inv - mode_mu) / mode_mu))

    rates, limit, residual = extrapolated_rate(spec, n_modes, mus)
    expected = bath.coefficient_set(spec).R_B / 6.0
    nu = spec.nu_bar
    f1 = limit / nu if nu > 0 else 0.0
    f1_dev = _relative_scalar(f1, expected) if nu > 0 else abs(limit)
    return OracleReport(
        n_modes=n_modes, thermostat=spec.thermostat.value, nu_bar=nu,
        mu_bar_scale=spec.mu_bar_scale, dt=dt, kappa=sep.kappa, sigma=sep.sigma,
        tau_S=tau, times=times, covariance_deviation=cov_dev, mean_deviation=mean_dev,
        max_deviation=max(cov_dev + mean_dev), mode_rate_deviation=mode_dev,
        mu_schedule=mus, rates=rates, extrapolated_rate=limit,
        extrapolation_residual=residual, f1_extrapolated=f1, f1_expected=expected,
        f1_deviation=f1_dev,
    )
