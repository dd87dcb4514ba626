"""Effective 2x2 Fokker-Planck dynamics of the system oscillator.

Conventions: the coefficients f1, f2, d1, d2 exclude the coupling nu_bar,
which enters only through

    F_eff = [[0, -1], [1 + nu*f2, nu*f1]],   D_eff = [[0, nu*d2], [nu*d2, nu*d1]].

The conditional P-distribution from a point ``r0`` is Gaussian with mean
``exp(-F_eff t) r0`` and precision ``A(t)``, where

    A(t)^-1 = A(inf)^-1 - exp(-F_eff t) A(inf)^-1 exp(-F_eff^T t).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import bath, quadrature
from .bath import BathSpec, Thermostat
from .errors import ContractError, ExtrapolationError, NumericalError

J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
NO_RESONANCE_WARNING = "no resonant thermalization: xi_c <= 1 leaves the resonance outside the bath"
DEFAULT_MU_SCHEDULE = (0.08, 0.04, 0.02)
N0_FLOOR = 1e-6


@dataclass(frozen=True)
class EffectiveModel:
    f1: float
    f2: float
    d1: float
    d2: float
    nu_bar: float
    N0: float
    R_B: float
    F_eff: np.ndarray
    D_eff: np.ndarray
    C: float
    thermostat: Thermostat = Thermostat.LB
    spec: BathSpec | None = field(default=None, compare=False)

    @classmethod
    def from_coefficients(cls, f1: float, f2: float, d1: float, d2: float,
                          spec: BathSpec, R_B: float = 1.0) -> "EffectiveModel":
        nu = spec.nu_bar
        N0 = bath.bose_occupation(1.0, spec.beta_hw0)
        F = np.array([[0.0, -1.0], [1.0 + nu * f2, nu * f1]])
        D = np.array([[0.0, nu * d2], [nu * d2, nu * d1]])
        F.setflags(write=False)
        D.setflags(write=False)
        C = f2 - 4.0 * d2 / N0 if N0 > 0 else math.nan
        return cls(f1=f1, f2=f2, d1=d1, d2=d2, nu_bar=nu, N0=N0, R_B=R_B,
                   F_eff=F, D_eff=D, C=C, thermostat=spec.thermostat, spec=spec)

    @classmethod
    def from_matrices(cls, F_eff, D_eff, spec: BathSpec, R_B: float = 1.0) -> "EffectiveModel":
        """Read the four coefficients back out of assembled effective matrices."""
        F = np.asarray(F_eff, dtype=float)
        D = np.asarray(D_eff, dtype=float)
        nu = spec.nu_bar
        if nu == 0:
            return cls.from_coefficients(0.0, 0.0, 0.0, 0.0, spec, R_B)
        return cls.from_coefficients(
            f1=F[1, 1] / nu, f2=(F[1, 0] - 1.0) / nu,
            d1=D[1, 1] / nu, d2=0.5 * (D[0, 1] + D[1, 0]) / nu,
            spec=spec, R_B=R_B,
        )

    def summary(self) -> dict:
        return {
            "f1": self.f1, "f2": self.f2, "d1": self.d1, "d2": self.d2,
            "R_B": self.R_B, "C": self.C, "N0": self.N0, "nu_bar": self.nu_bar,
            "thermostat": self.thermostat.value,
            "tau_S": relaxation_time(self),
        }


@dataclass(frozen=True)
class GaussianKernel:
    """Precision matrix of the conditional P-distribution at time ``t``.

    ``A`` is ``None`` when the covariance ``A_inv`` is still singular, which
    happens at t = 0 (and forever when the system is uncoupled).
    """

    t: float
    A: np.ndarray | None
    A_inv: np.ndarray
    propagator: np.ndarray

    @property
    def is_delta(self) -> bool:
        return self.A is None


# --------------------------------------------------------------------------
# coefficients

def _pole_at_one(numerator, xi_c: float, tol: float) -> float:
    if xi_c == 1.0:
        raise ContractError("coefficient integrals diverge when xi_c == 1")
    if xi_c > 1.0:
        return quadrature.pv_integrate(numerator, 1.0, 0.0, xi_c, tol=tol).value
    return quadrature.integrate(lambda x: numerator(x) / (x - 1.0), 0.0, xi_c, tol=tol).value


def limit_f2(xi_c: float, tol: float = 1e-12) -> float:
    """``-(1/3pi) PV int_0^xi_c x^4 / (x^2 - 1) dx``."""
    return -_pole_at_one(lambda x: x ** 4 / (x + 1.0), xi_c, tol) / (3.0 * math.pi)


def limit_d2(xi_c: float, beta_hw0: float | None, tol: float = 1e-12) -> float:
    """``(1/24pi) PV int_0^xi_c x^3 [1/(x+1) - 2N(x)/(x^2-1)] dx``.

    ``beta_hw0=None`` selects zero temperature (N = 0).
    """
    regular = quadrature.integrate(lambda x: x ** 3 / (x + 1.0), 0.0, xi_c, tol=tol).value
    if beta_hw0 is None:
        singular = 0.0
    else:
        singular = _pole_at_one(
            lambda x: 2.0 * bath._occupation_or_limit(x, beta_hw0, 3) / (x + 1.0), xi_c, tol)
    return (regular - singular) / (24.0 * math.pi)


def limit_coefficients(spec: BathSpec, tol: float = 1e-12) -> EffectiveModel:
    """Coefficients in the limit of vanishing super-bath damping."""
    N0 = bath.bose_occupation(1.0, spec.beta_hw0)
    coeffs = bath.coefficient_set(spec, tol=tol)
    R_B = coeffs.R_B
    if spec.xi_c > 1.0:
        f1 = R_B / 6.0
        d1 = R_B * N0 / 12.0
    else:
        warnings.warn(NO_RESONANCE_WARNING, RuntimeWarning, stacklevel=2)
        f1 = d1 = 0.0
    f2 = limit_f2(spec.xi_c, tol)
    d2 = limit_d2(spec.xi_c, spec.beta_hw0, tol)
    return EffectiveModel.from_coefficients(f1, f2, d1, d2, spec, R_B)


def mode_integrands(xi: float, mu: float, alpha: float, N: float,
                    thermostat: Thermostat) -> tuple[float, float, float, float]:
    """Per-mode contributions (f1, f2, d1, d2) from eliminating one bath mode.

    Closed-form solution of the two 2x2 Sylvester equations for a mode with
    drift ``[[e3*mu, -xi], [xi + e2*alpha, e1*mu]]``; the continuum coefficient
    is ``(1/3pi) int xi^3 g(xi) dxi`` for each returned ``g``.
    """
    e1, e2, e3 = Thermostat.parse(thermostat).epsilons
    a = e2 * alpha
    u = xi * xi - 1.0
    H = (u + a * xi) ** 2 + mu * mu * (
        e1 * e1 + e3 * e3 + 2.0 * e1 * e3 * xi * xi + 2.0 * e1 * e3 * a * xi
        + e1 * e1 * e3 * e3 * mu * mu)
    f1 = mu * (e1 + e3) * (a + xi) / H
    f2 = -(a + xi) * (u + a * xi + e1 * e3 * mu * mu) / H
    d1 = mu * (2.0 * N * (a * e3 * xi + e1 * e3 * e3 * mu * mu + e1 + e3 * xi * xi)
               - a * e1 + a * e3 * xi - a * e3 + e1 * e3 * e3 * mu * mu
               - e1 * xi + e1 + e3 * xi * xi - e3 * xi) / (4.0 * H)
    d2 = (2.0 * N * (-a * xi + e3 * e3 * mu * mu - u)
          + a * a * xi + a * e1 * e3 * mu * mu + 2.0 * a * xi * xi - a * xi - a
          + e1 * e3 * mu * mu * xi + e3 * e3 * mu * mu + (xi - 1.0) * u) / (8.0 * H)
    return f1, f2, d1, d2


def finite_mu_values(spec: BathSpec, tol: float = 1e-10) -> tuple[float, float, float, float]:
    """Continuum coefficients at the finite damping scale ``spec.mu_bar_scale``."""
    if spec.mu_bar_scale <= 0:
        raise ContractError("finite-damping coefficients need mu_bar_scale > 0")
    thermostat = spec.thermostat
    beta = spec.beta_hw0
    rf = thermostat is Thermostat.RF

    def parts(x: float) -> tuple[float, float, float, float]:
        mu = bath.mu_bar(x, spec)
        alpha = spec.mu_bar_scale * x * bath.principal_P(x, spec) if rf else 0.0
        N = 1.0 / math.expm1(beta * x)
        return mode_integrands(x, mu, alpha, N, thermostat)

    width = spec.mu_bar_scale * spec.J(1.0)
    points = [1.0 + k * width for k in (-8, -2, -0.5, 0.0, 0.5, 2, 8)]
    if rf:
        points.append(spec.xi_c * (1 - 1e-3))
    values = []
    for idx in range(4):
        def g(x: float, idx=idx) -> float:
            return x ** 3 * parts(x)[idx]

        res = quadrature.integrate(g, 0.0, spec.xi_c, tol=tol, tol_abs=1e-15, points=points)
        values.append(res.value / (3.0 * math.pi))
    return tuple(values)


def richardson(mus, values) -> tuple[float, float]:
    """Polynomial extrapolation of ``values(mu)`` to mu = 0.

    Returns the limit from all points and the change relative to the
    extrapolation that drops the coarsest point, as a residual.
    """
    mus = np.asarray(mus, dtype=float)
    values = np.asarray(values, dtype=float)

    def neville(x, y):
        p = list(y)
        n = len(x)
        for level in range(1, n):
            for i in range(n - level):
                p[i] = (x[i + level] * p[i] - x[i] * p[i + 1]) / (x[i + level] - x[i])
        return p[0]

    full = neville(mus, values)
    if len(mus) < 2:
        return float(full), math.inf
    reduced = neville(mus[1:], values[1:])
    return float(full), float(abs(full - reduced))


def finite_mu_coefficients(spec: BathSpec, mu_schedule=DEFAULT_MU_SCHEDULE,
                           tol: float = 1e-10, max_residual: float = 0.02) -> EffectiveModel:
    """Finite-damping coefficients extrapolated to vanishing damping.

    ``mu_schedule`` lists damping scales (``mu_bar_scale`` values), strictly
    decreasing.  The relative extrapolation residual of every coefficient
    must stay below ``max_residual``.
    """
    mus = [float(m) for m in mu_schedule]
    if len(mus) < 2 or any(m <= 0 for m in mus) or any(b >= a for a, b in zip(mus, mus[1:])):
        raise ContractError("mu_schedule must be strictly decreasing positive values (at least two)")
    if spec.xi_c <= 1.0:
        warnings.warn(NO_RESONANCE_WARNING, RuntimeWarning, stacklevel=2)
    table = np.array([finite_mu_values(spec.replace(mu_bar_scale=m), tol) for m in mus])
    limits = []
    for idx, name in enumerate(("f1", "f2", "d1", "d2")):
        value, residual = richardson(mus, table[:, idx])
        scale = max(abs(value), 1e-3)
        if residual > max_residual * scale:
            raise ExtrapolationError(
                f"extrapolation of {name} unstable: residual {residual:.3e}", residual)
        limits.append(value)
    R_B = bath.coefficient_set(spec).R_B
    return EffectiveModel.from_coefficients(*limits, spec=spec, R_B=R_B)


# --------------------------------------------------------------------------
# steady state

def _check_stable(F: np.ndarray) -> None:
    if np.any(np.linalg.eigvals(F).real <= 0):
        raise NumericalError("drift matrix is not stable (eigenvalue with Re <= 0)")


def lyapunov_Q(F, D) -> np.ndarray:
    """Antisymmetric ``Q`` with ``F Q + Q F^T = F D - D F^T``.

    In two dimensions ``Q = q J`` with ``J = [[0, 1], [-1, 0]]`` and
    ``F J + J F^T = tr(F) J``, so the equation has one unknown.
    """
    F = np.asarray(F, dtype=float)
    D = np.asarray(D, dtype=float)
    _check_stable(F)
    trace = F[0, 0] + F[1, 1]
    if abs(trace) < 1e-300:
        raise NumericalError("singular Q equation: drift has a purely imaginary spectrum")
    R = F @ D - D @ F.T
    return (R[0, 1] / trace) * J2


def steady_precision(F, D) -> np.ndarray:
    """Stationary precision ``(D + Q)^-1 F`` of a stable 2x2 OU process."""
    F = np.asarray(F, dtype=float)
    D = np.asarray(D, dtype=float)
    Q = lyapunov_Q(F, D)
    A = np.linalg.solve(D + Q, F)
    return 0.5 * (A + A.T)


def steady_kernel(model: EffectiveModel) -> np.ndarray:
    return steady_precision(model.F_eff, model.D_eff)


def lyapunov_residual(F, D, A) -> float:
    """``max |F S + S F^T - 2D|`` with ``S = A^-1``."""
    S = np.linalg.inv(A)
    return float(np.max(np.abs(F @ S + S @ F.T - 2.0 * D)))


def steady_first_order(model: EffectiveModel) -> np.ndarray:
    """Leading correction: ``diag((2/N0)(1 + C nu), 2/N0)``."""
    N0 = model.N0
    return np.diag([2.0 / N0 * (1.0 + model.C * model.nu_bar), 2.0 / N0])


# --------------------------------------------------------------------------
# time dependence

def expm2(F, t: float) -> np.ndarray:
    """``exp(-F t)`` for a real 2x2 matrix via the eigen-pair formula."""
    F = np.asarray(F, dtype=float)
    s = 0.5 * (F[0, 0] + F[1, 1])
    M = F - s * np.eye(2)
    w2 = F[0, 0] * F[1, 1] - F[0, 1] * F[1, 0] - s * s
    if w2 > 0:
        w = math.sqrt(w2)
        c, sn = math.cos(w * t), math.sin(w * t) / w
    elif w2 < 0:
        k = math.sqrt(-w2)
        c, sn = math.cosh(k * t), math.sinh(k * t) / k
    else:
        c, sn = 1.0, t
    return math.exp(-s * t) * (c * np.eye(2) - sn * M)


def shifted_frequency(model: EffectiveModel) -> float:
    """Imaginary part of the F_eff eigenvalues."""
    F = model.F_eff
    s = 0.5 * (F[0, 0] + F[1, 1])
    w2 = F[0, 0] * F[1, 1] - F[0, 1] * F[1, 0] - s * s
    return math.sqrt(w2) if w2 > 0 else 0.0


def relaxation_time(model: EffectiveModel) -> float:
    """``1 / (nu f1)``; infinite when there is no resonant relaxation."""
    rate = model.nu_bar * model.f1
    return math.inf if rate <= 0 else 1.0 / rate


def _stationary_covariance(model: EffectiveModel) -> np.ndarray:
    if not np.any(model.D_eff):
        return np.zeros((2, 2))
    return np.linalg.inv(steady_kernel(model))


def kernel_at(model: EffectiveModel, t: float) -> GaussianKernel:
    """Conditional kernel from the propagator form of the covariance."""
    if t < 0:
        raise ContractError("t must be non-negative")
    E = expm2(model.F_eff, t)
    S = _stationary_covariance(model)
    A_inv = S - E @ S @ E.T
    A_inv = 0.5 * (A_inv + A_inv.T)
    tau = relaxation_time(model)
    if t == 0 or not np.any(S) or (math.isfinite(tau) and t < 1e-6 * tau):
        return GaussianKernel(t=t, A=None, A_inv=A_inv, propagator=E)
    A = np.linalg.inv(A_inv)
    return GaussianKernel(t=t, A=0.5 * (A + A.T), A_inv=A_inv, propagator=E)


def kernel_closed_form(model: EffectiveModel, t: float) -> np.ndarray:
    """Exact ``A(t)`` written as decay times constant, cos 2w't and sin 2w't terms.

    With ``F = s I + M`` and ``w'^2 = det F - s^2`` one has
    ``exp(-F t) = e^{-st} [cos(w't) I - sin(w't)/w' M]``, so

        A^-1(t) = S - e^{-t/tau} [K0 + Kc cos 2w't + Ks sin 2w't]

    with ``K0 = (S + M S M^T / w'^2)/2``, ``Kc = (S - M S M^T / w'^2)/2`` and
    ``Ks = -(M S + S M^T)/(2 w')``; the 2x2 inverse is then written out.
    """
    if t <= 0:
        raise ContractError("closed form needs t > 0")
    F = model.F_eff
    s = 0.5 * (F[0, 0] + F[1, 1])
    w = shifted_frequency(model)
    if w == 0 or s <= 0:
        raise NumericalError("closed form requires an underdamped, relaxing drift")
    M = F - s * np.eye(2)
    S = _stationary_covariance(model)
    MSM = M @ S @ M.T / (w * w)
    K0 = 0.5 * (S + MSM)
    Kc = 0.5 * (S - MSM)
    Ks = -(M @ S + S @ M.T) / (2.0 * w)
    decay = math.exp(-2.0 * s * t)
    B = S - decay * (K0 + Kc * math.cos(2 * w * t) + Ks * math.sin(2 * w * t))
    det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    return np.array([[B[1, 1], -B[0, 1]], [-B[1, 0], B[0, 0]]]) / det


def kernel_first_order(model: EffectiveModel, t: float) -> np.ndarray:
    """Leading-order expansion of ``A(t)`` in the coupling, valid for t >> 1.

    Coupling-scaled coefficients (``nu * f``) enter each correction term.
    """
    if t <= 0:
        raise ContractError("t must be positive")
    N0 = model.N0
    nu = model.nu_bar
    F1, F2, D2 = nu * model.f1, nu * model.f2, nu * model.d2
    tau = relaxation_time(model)
    e = math.exp(-t / tau)
    w = shifted_frequency(model)
    c, sn = math.cos(2 * w * t), math.sin(2 * w * t)
    den = N0 ** 2 * (1.0 - e) ** 2
    base = 2.0 / (N0 * (1.0 - e))
    A = np.array([
        [base + (2 * F2 * N0 - 8 * D2 + e * (8 * D2 - 2 * F2 * N0)) / den, -e * F1 * N0 / den],
        [-e * F1 * N0 / den, base + e * 2 * D2 / den],
    ])
    A += e / den * np.array([
        [4 * D2 * c - F1 * N0 * sn, F1 * N0 * c + 4 * D2 * sn],
        [F1 * N0 * c + 4 * D2 * sn, 2 * D2 * c + F1 * N0 * sn],
    ])
    return A


def kernel_rk4(model: EffectiveModel, times, dt: float = 0.01) -> np.ndarray:
    """``A(t)`` from RK4 integration of the covariance flow starting at zero."""
    from .blocks import propagate_moments

    covs, _ = propagate_moments(model.F_eff, model.D_eff, np.zeros((2, 2)),
                                np.zeros(2), times, dt)
    return np.array([np.linalg.inv(S) for S in covs])
