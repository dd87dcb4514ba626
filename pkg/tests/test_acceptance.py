"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test records a single PASS/FAIL line, which is repeated in the pytest
terminal summary under "acceptance criteria".
"""

from __future__ import annotations

import math
import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import trapezoid

from tripartite import cli, density, effective, oracle, phase_space, redfield
from tripartite.bath import BathSpec

pytestmark = pytest.mark.acceptance

# Closed-form references at beta = 1, xi_c = 2.
LN3 = math.log(3.0)
F2_REF = -(8.0 / 3.0 + 2.0 + 0.5 * math.log(1.0 / 3.0)) / (3.0 * math.pi)
D2_T0_REF = (8.0 / 3.0 - LN3) / (24.0 * math.pi)
N0_REF = 1.0 / math.expm1(1.0)


def test_criterion_1_coefficient_limits(acceptance):
    start = time.perf_counter()
    m = effective.limit_coefficients(BathSpec())
    d2_t0 = effective.limit_d2(2.0, None)
    elapsed = time.perf_counter() - start
    errors = {
        "f1": abs(m.f1 - 1.0 / 6.0),
        "d1": abs(m.d1 - N0_REF / 12.0),
        "f2": abs(m.f2 - F2_REF),
        "d2(T=0)": abs(d2_t0 - D2_T0_REF),
    }
    ok = (errors["f1"] <= 1e-12 and errors["d1"] <= 1e-12 and errors["f2"] <= 1e-6
          and errors["d2(T=0)"] <= 1e-6 and elapsed < 1.0)
    detail = ", ".join(f"|{k}| err {v:.1e}" for k, v in errors.items())
    acceptance(1, ok, f"{detail}; f2 = {m.f2:.8f}; {elapsed:.2f} s")
    assert ok


def test_criterion_2_finite_damping_convergence(acceptance):
    start = time.perf_counter()
    m = effective.finite_mu_coefficients(BathSpec(), mu_schedule=(0.08, 0.04, 0.02))
    elapsed = time.perf_counter() - start
    rel_f1 = abs(m.f1 - 1.0 / 6.0) * 6.0
    rel_d1 = abs(m.d1 - N0_REF / 12.0) / (N0_REF / 12.0)
    ok = rel_f1 < 0.01 and rel_d1 < 0.01 and elapsed < 10.0
    acceptance(2, ok, f"f1 rel {rel_f1:.2e}, d1 rel {rel_d1:.2e}; {elapsed:.2f} s")
    assert ok


def test_criterion_3_redfield_factor_four(acceptance):
    start = time.perf_counter()
    worst = 0.0
    for thermostat in ("LB", "RF"):
        for beta in (0.5, 1.0, 2.0):
            for xi_c in (1.5, 2.0, 4.0):
                spec = BathSpec(thermostat=thermostat, beta_hw0=beta, xi_c=xi_c)
                report = redfield.compare(effective.limit_coefficients(spec),
                                          redfield.redfield_coefficients(spec))
                for key, expected in report["expected_ratios"].items():
                    worst = max(worst, abs(report["ratios"][key] - expected))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and elapsed < 30.0
    acceptance(3, ok, f"max ratio error {worst:.1e} over 18 parameter sets; {elapsed:.2f} s")
    assert ok


def test_criterion_4_steady_state(acceptance):
    start = time.perf_counter()
    worst_residual, margins = 0.0, []
    for nu in (0.05, 0.1):
        kernels = {}
        for thermostat in ("LB", "RF"):
            m = effective.limit_coefficients(BathSpec(thermostat=thermostat, nu_bar=nu))
            A = effective.steady_kernel(m)
            kernels[thermostat] = A
            worst_residual = max(worst_residual, effective.lyapunov_residual(m.F_eff, m.D_eff, A))
            bound = 3.0 * nu * nu
            margins.append(abs(A[0, 0] - 2.0 / m.N0 * (1.0 + m.C * nu)) / bound)
            margins.append(abs(A[1, 1] - 2.0 / m.N0) / bound)
        margins.append(float(np.max(np.abs(kernels["LB"] - kernels["RF"]))) / (3.0 * nu * nu))
    elapsed = time.perf_counter() - start
    ok = worst_residual < 1e-10 and max(margins) <= 1.0 and elapsed < 5.0
    acceptance(4, ok, f"Lyapunov residual {worst_residual:.1e}, worst discrepancy "
                      f"{max(margins):.2f} of 3 nu^2; {elapsed:.2f} s")
    assert ok


def test_criterion_5_kernel_equivalence(acceptance):
    start = time.perf_counter()
    m = effective.limit_coefficients(BathSpec())
    tau = effective.relaxation_time(m)
    times = np.linspace(0.01 * tau, 3.0 * tau, 50)
    rk4 = effective.kernel_rk4(m, times, dt=0.0025)
    worst_cov, worst_prec = 0.0, 0.0
    for t, A_rk in zip(times, rk4):
        kernel = effective.kernel_at(m, float(t))
        A_closed = effective.kernel_closed_form(m, float(t))
        covs = (kernel.A_inv, np.linalg.inv(A_closed), np.linalg.inv(A_rk))
        precs = (kernel.A, A_closed, A_rk)
        scale = float(np.max(np.abs(A_closed)))
        for i in range(3):
            for j in range(i + 1, 3):
                worst_cov = max(worst_cov, float(np.max(np.abs(covs[i] - covs[j]))))
                worst_prec = max(worst_prec, float(np.max(np.abs(precs[i] - precs[j]))) / scale)
    elapsed = time.perf_counter() - start
    ok = worst_cov < 1e-8 and worst_prec < 1e-8 and elapsed < 5.0
    acceptance(5, ok, f"covariance max diff {worst_cov:.1e}, A max diff relative to its "
                      f"largest entry {worst_prec:.1e}; {elapsed:.2f} s")
    assert ok


@pytest.mark.slow
def test_criterion_6_brute_force_oracle(acceptance):
    start = time.perf_counter()
    rep = oracle.run_oracle(BathSpec(nu_bar=0.005, mu_bar_scale=0.04), n_modes=64,
                            mu_schedule=(0.08, 0.04, 0.02), t_factors=(0.5, 1.0, 2.0))
    elapsed = time.perf_counter() - start
    ok = (rep.max_deviation < 0.05 and rep.f1_deviation < 0.02
          and rep.mode_rate_deviation < 0.02 and elapsed < 300.0)
    acceptance(6, ok, f"moments max rel dev {rep.max_deviation:.2e}, rate dev "
                      f"{rep.f1_deviation:.2e}, mode rates dev {rep.mode_rate_deviation:.2e} "
                      f"(kappa {rep.kappa:.3f}, sigma {rep.sigma:.3f}); {elapsed:.1f} s")
    assert ok


def test_criterion_7_fock_negativity_decay(acceptance):
    start = time.perf_counter()
    m = effective.limit_coefficients(BathSpec(nu_bar=0.1, xi_c=2.0, beta_hw0=1.0))
    tau = effective.relaxation_time(m)
    grid = phase_space.Grid.default_for(m)
    masses, norms = [], []
    for t in (200.0, 300.0, 400.0, 500.0, 1000.0):
        field = phase_space.field_fock1(m, t, grid)
        _, mass, _ = phase_space.negativity_metrics(field)
        masses.append(mass)
        norms.append(field.normalization())
    min_p_5tau = phase_space.negativity_metrics(phase_space.field_fock1(m, 5.0 * tau, grid))[0]
    elapsed = time.perf_counter() - start
    checks = {
        "negative at 200 and 300": masses[0] > 0 and masses[1] > 0,
        "strictly decreasing": all(b < a for a, b in zip(masses, masses[1:])),
        "min P at 5 tau_S": min_p_5tau >= -1e-6,
        "normalization": all(abs(n - 1.0) <= 1e-3 for n in norms),
        "runtime": elapsed < 120.0,
    }
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    masses_text = ", ".join(f"{x:.2e}" for x in masses)
    acceptance(7, ok, f"tau_S {tau:.1f}, negative mass [{masses_text}], min P(5 tau_S) "
                      f"{min_p_5tau:.1e}, max |norm-1| {max(abs(n - 1) for n in norms):.1e}; "
                      f"{elapsed:.1f} s" + (f"; failed: {', '.join(failed)}" if failed else ""))
    assert ok


def _linear_p_populations(model, n_levels=4, half_width=12.0, points=1201):
    """Fock populations from integrating the first-order steady P field."""
    x = np.linspace(-half_width, half_width, points)
    X, Y = np.meshgrid(x, x)
    N0 = model.N0
    R2 = X * X + Y * Y
    P = np.exp(-R2 / N0) / (math.pi * N0) * (1 + model.C * model.nu_bar * (0.5 - X * X / N0))
    return np.array([trapezoid(trapezoid(P * np.exp(-R2) * R2 ** n / math.factorial(n), x), x)
                     for n in range(n_levels)])


def test_criterion_8_density_matrix(acceptance):
    start = time.perf_counter()
    n_max = 60
    rho0 = density.rho_zero(1.0, n_max)
    n = np.arange(n_max + 1)
    boltzmann = (1.0 - math.exp(-1.0)) * np.exp(-n)
    err0 = float(np.max(np.abs(np.diag(rho0.elements) - boltzmann)))
    m = effective.limit_coefficients(BathSpec(nu_bar=0.1))
    trace1 = abs(density.rho_one(m, n_max).trace())
    rho = density.steady_density(m, n_max)
    err_p = float(np.max(np.abs(np.diag(rho)[:4] - _linear_p_populations(m))))
    elapsed = time.perf_counter() - start
    ok = err0 <= 1e-12 and trace1 <= 1e-10 and err_p <= 1e-4 and elapsed < 10.0
    acceptance(8, ok, f"Boltzmann err {err0:.1e}, |Tr rho1| {trace1:.1e}, inverse-P "
                      f"population err {err_p:.1e}; {elapsed:.2f} s")
    assert ok


def _snapshot(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.mark.slow
def test_criterion_9_cli_determinism(acceptance, tmp_path, capsys):
    start = time.perf_counter()
    cwd = os.getcwd()
    mismatched = []
    try:
        for name in cli.COMMANDS:
            runs = []
            for attempt in ("first", "second"):
                work = tmp_path / name / attempt
                work.mkdir(parents=True)
                os.chdir(work)
                code = cli.main([name])
                out, err = capsys.readouterr()
                runs.append((code, out, err, _snapshot(work)))
            if runs[0] != runs[1]:
                mismatched.append(name)
    finally:
        os.chdir(cwd)
    elapsed = time.perf_counter() - start
    ok = not mismatched
    acceptance(9, ok, f"{len(cli.COMMANDS)} subcommands run twice, mismatches: "
                      f"{mismatched or 'none'}; {elapsed:.1f} s")
    assert ok
