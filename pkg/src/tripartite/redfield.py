"""Conventional Redfield dynamics of the isolated system-plus-bath pair.

The Redfield master equation with rates ``Gamma(w) = gamma(w)/2 + i S(w)``
at ``w = +-1`` maps, in the P-representation, to the same drift/diffusion
pattern as the marginal theory:

    F_rf = [[0, -1], [1 + 2 (S(1) + S(-1)), gamma(1) - gamma(-1)]]
    D_rf = [[0, -S(-1)/2], [-S(-1)/2, gamma(-1)/2]]

with ``gamma(1) = (2/3) nu (N0 + 1)``, ``gamma(-1) = (2/3) nu N0`` and
``S(+-1)`` assembled from the two principal-value sums S+~ and S-.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import bath, effective
from .bath import BathSpec
from .effective import EffectiveModel
from .errors import ContractError, NumericalError


@dataclass(frozen=True)
class RedfieldModel:
    f1_rf: float
    f2_rf: float
    d1_rf: float
    d2_rf: float
    F_rf: np.ndarray
    D_rf: np.ndarray
    S_plus_tilde: float
    S_minus: float
    nu_bar: float
    N0: float
    spec: BathSpec


def emission_rate(xi: float, spec: BathSpec) -> float:
    """``gamma(xi)`` for a photon bath with density of states ~ xi^2; xi = +-1 only."""
    N = bath.bose_occupation(abs(xi), spec.beta_hw0)
    occupation = N + 1.0 if xi > 0 else N
    return 2.0 / 3.0 * spec.nu_bar * abs(xi) ** 3 * occupation


def lamb_shifts(spec: BathSpec, tol: float = 1e-12) -> tuple[float, float, float, float]:
    """``(S(1), S(-1), S+~, S-)``, using S(1) +- S(-1) = (nu/3pi) (S+~, S-)."""
    sp = bath.s_plus_tilde(spec.xi_c, tol)
    sm = bath.s_minus(spec.xi_c, spec.beta_hw0, tol)
    k = spec.nu_bar / (3.0 * math.pi)
    return 0.5 * k * (sp + sm), 0.5 * k * (sp - sm), sp, sm


def redfield_coefficients(spec: BathSpec, tol: float = 1e-12) -> RedfieldModel:
    if spec.xi_c <= 1.0:
        raise ContractError("Redfield comparison needs xi_c > 1")
    N0 = bath.bose_occupation(1.0, spec.beta_hw0)
    g_up = emission_rate(1.0, spec)
    g_down = emission_rate(-1.0, spec)
    S_pos, S_neg, sp, sm = lamb_shifts(spec, tol)
    F = np.array([[0.0, -1.0], [1.0 + 2.0 * (S_pos + S_neg), g_up - g_down]])
    D = np.array([[0.0, -0.5 * S_neg], [-0.5 * S_neg, 0.5 * g_down]])
    # Coefficients are quoted without the coupling, as in the marginal model.
    # They are evaluated at unit coupling so that nu = 0 is still informative.
    unit = spec.replace(nu_bar=1.0)
    S1u, Sm1u, _, _ = lamb_shifts(unit, tol)
    f1 = emission_rate(1.0, unit) - emission_rate(-1.0, unit)
    f2 = 2.0 * (S1u + Sm1u)
    d1 = 0.5 * emission_rate(-1.0, unit)
    d2 = -0.5 * Sm1u
    return RedfieldModel(f1_rf=f1, f2_rf=f2, d1_rf=d1, d2_rf=d2, F_rf=F, D_rf=D,
                         S_plus_tilde=sp, S_minus=sm, nu_bar=spec.nu_bar, N0=N0, spec=spec)


def _same_physics(a: BathSpec, b: BathSpec) -> bool:
    return (a.beta_hw0 == b.beta_hw0 and a.xi_c == b.xi_c and a.nu_bar == b.nu_bar
            and a.ohmic_slope == b.ohmic_slope)


def compare(model: EffectiveModel, rf: RedfieldModel) -> dict:
    """Ratios, steady kernels, relaxation times and steady corrections side by side."""
    if model.spec is None or not _same_physics(model.spec, rf.spec):
        raise ContractError("marginal and Redfield models were built from different parameters")
    ratios = {
        "f1": model.f1 / rf.f1_rf,
        "f2": model.f2 / rf.f2_rf,
        "d1": model.d1 / rf.d1_rf,
        "d2": model.d2 / rf.d2_rf,
    }
    C_rf = rf.f2_rf - 4.0 * rf.d2_rf / rf.N0
    tau_marginal = effective.relaxation_time(model)
    rate_rf = rf.nu_bar * rf.f1_rf
    tau_rf = math.inf if rate_rf <= 0 else 1.0 / rate_rf
    report = {
        "schema_version": 1,
        "thermostat": model.thermostat.value,
        "R_B": model.R_B,
        "ratios": ratios,
        "expected_ratios": {"f1": model.R_B / 4, "f2": 0.25, "d1": model.R_B / 4, "d2": 0.25},
        "marginal": {"f1": model.f1, "f2": model.f2, "d1": model.d1, "d2": model.d2},
        "redfield": {"f1": rf.f1_rf, "f2": rf.f2_rf, "d1": rf.d1_rf, "d2": rf.d2_rf,
                     "S_plus_tilde": rf.S_plus_tilde, "S_minus": rf.S_minus},
        "tau_S_marginal": tau_marginal,
        "tau_S_redfield": tau_rf,
        "tau_ratio": tau_marginal / tau_rf if math.isfinite(tau_rf) else math.nan,
        "steady_correction_marginal": model.C * model.nu_bar,
        "steady_correction_redfield": C_rf * rf.nu_bar,
        "steady_correction_difference": (C_rf - model.C) * rf.nu_bar,
    }
    for key, F, D in (("steady_kernel_marginal", model.F_eff, model.D_eff),
                      ("steady_kernel_redfield", rf.F_rf, rf.D_rf)):
        try:
            report[key] = effective.steady_precision(F, D).tolist()
        except NumericalError:
            # A large frequency renormalisation can destabilise the drift.
            report[key] = None
    return report


def format_report(report: dict) -> str:
    lines = [f"thermostat {report['thermostat']}  R_B = {report['R_B']:.12g}",
             f"{'coef':<6}{'marginal':>20}{'redfield':>20}{'ratio':>18}{'expected':>18}"]
    for key in ("f1", "f2", "d1", "d2"):
        lines.append(f"{key:<6}{report['marginal'][key]:>20.12g}{report['redfield'][key]:>20.12g}"
                     f"{report['ratios'][key]:>18.12g}{report['expected_ratios'][key]:>18.12g}")
    lines.append(f"tau_S marginal {report['tau_S_marginal']:.12g}  redfield {report['tau_S_redfield']:.12g}")
    lines.append(f"steady correction marginal {report['steady_correction_marginal']:.12g}"
                 f"  redfield {report['steady_correction_redfield']:.12g}")
    return "\n".join(lines)


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
