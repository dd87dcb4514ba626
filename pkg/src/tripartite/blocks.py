"""Finite-N composite model: system oscillator plus N damped photon modes.

The state vector is ``q = (x0, y0, x1, y1, ..., xN, yN)``; index pair 0 is the
system and pair ``i + 1`` is bath mode ``i``.  The P-representation of the
composite evolves as an Ornstein-Uhlenbeck process

    dP/dt = div[(F q) P + D grad P]

with block drift and diffusion matrices.  Eliminating each fast mode through
two 2x2 Sylvester equations gives the effective system matrices, and
integrating the moment equations directly gives the brute-force reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import bath
from .bath import BathSpec, Thermostat
from .errors import ContractError, NumericalError, ResonanceError

F_S = np.array([[0.0, -1.0], [1.0, 0.0]])
SYLVESTER_RESIDUAL_TOL = 1e-12
MIN_PANEL_NODES = 4


@dataclass(frozen=True)
class ModeBlock:
    """Parameters of a single bath mode."""

    omega: float
    gamma: float
    mu: float
    N: float
    alpha: float = 0.0
    delta: float = 0.0


def mode_drift(mode: ModeBlock, thermostat: Thermostat) -> np.ndarray:
    e1, e2, e3 = Thermostat.parse(thermostat).epsilons
    return np.array([
        [e3 * mode.mu, -mode.omega],
        [mode.omega + e2 * mode.alpha, e1 * mode.mu],
    ])


def mode_diffusion(mode: ModeBlock, thermostat: Thermostat) -> np.ndarray:
    if Thermostat.parse(thermostat) is Thermostat.LB:
        return 0.25 * mode.N * mode.mu * np.eye(2)
    return np.array([[0.0, mode.delta], [mode.delta, 0.5 * mode.N * mode.mu]])


def coupling_blocks(gamma: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (system-row drift, bath-row drift, system-row diffusion) coupling blocks."""
    f_off = np.array([[0.0, 0.0], [0.0, gamma]])
    f_off_tilde = np.array([[-gamma, 0.0], [0.0, 0.0]])
    d_off = gamma / 8.0 * np.array([[1.0, 0.0], [0.0, -1.0]])
    return f_off, f_off_tilde, d_off


@dataclass(frozen=True)
class FiniteSystem:
    modes: tuple[ModeBlock, ...]
    F: np.ndarray
    D: np.ndarray
    thermostat: Thermostat = Thermostat.LB
    spec: BathSpec | None = field(default=None, compare=False)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def dim(self) -> int:
        return 2 * len(self.modes) + 2


@dataclass(frozen=True)
class SylvesterPair:
    I1: np.ndarray
    I2: np.ndarray
    residual1: float
    residual2: float


def _gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def mode_grid(spec: BathSpec, n_modes: int, xi_min: float = 0.05,
              resonance_halfwidth: float | None = None,
              growth: float = 3.0) -> list[tuple[float, float]]:
    """Composite Gauss-Legendre nodes on ``[xi_min, xi_c]`` graded toward xi = 1.

    A core panel ``1 +- h`` (default ``h = mu_bar(1) / 2``) is surrounded by
    panels whose widths grow geometrically by ``growth``, so the resonant
    Lorentzian of width ~mu_bar is resolved at every scale with a fixed
    number of nodes per panel.  Too few nodes for the panels coarsens the
    grading, down to a single Gauss-Legendre rule.  Returns ``(xi_i, w_i)``
    sorted by frequency.
    """
    if n_modes < 1:
        raise ContractError("n_modes must be at least 1")
    if not 0 < xi_min < spec.xi_c:
        raise ContractError("need 0 < xi_min < xi_c")
    if growth <= 1:
        raise ContractError("growth must exceed 1")
    mu_res = spec.mu_bar_scale * spec.J(1.0)
    h = 0.5 * mu_res if resonance_halfwidth is None else resonance_halfwidth
    use_core = spec.xi_c > 1.0 and xi_min < 1.0 and h > 0 and n_modes >= 3 * MIN_PANEL_NODES
    if use_core:
        h = min(h, 0.5 * (1.0 - xi_min), 0.5 * (spec.xi_c - 1.0))
    if not use_core:
        xs, ws = _gauss_legendre(xi_min, spec.xi_c, n_modes)
        return list(zip(xs.tolist(), ws.tolist()))

    def edges(limit: float, sign: float, ratio: float) -> list[float]:
        out, width = [], h
        while True:
            nxt = 1.0 + sign * width * ratio
            # Merge the last panel if the remaining stretch would be a sliver.
            if sign * (limit - nxt) <= 0.5 * width * (ratio - 1.0) or sign * (nxt - limit) >= 0:
                out.append(limit)
                return out
            out.append(nxt)
            width *= ratio

    # Coarsen the grading until every panel gets at least MIN_PANEL_NODES nodes.
    ratio = growth
    while True:
        bounds = sorted([1.0 - h, 1.0 + h] + edges(xi_min, -1.0, ratio) + edges(spec.xi_c, 1.0, ratio))
        panels = list(zip(bounds[:-1], bounds[1:]))
        if n_modes >= MIN_PANEL_NODES * len(panels) or len(panels) <= 3:
            break
        ratio *= 1.5
    n_each, extra = divmod(n_modes, len(panels))
    if n_each < MIN_PANEL_NODES:
        xs, ws = _gauss_legendre(xi_min, spec.xi_c, n_modes)
        return list(zip(xs.tolist(), ws.tolist()))
    core = panels.index((1.0 - h, 1.0 + h))
    out: list[tuple[float, float]] = []
    for k, (a, b) in enumerate(panels):
        n = n_each + (extra if k == core else 0)
        xs, ws = _gauss_legendre(a, b, n)
        out.extend(zip(xs.tolist(), ws.tolist()))
    return out


def build_finite_system(spec: BathSpec, mode_grid: list[tuple[float, float]]) -> FiniteSystem:
    """Assemble the block drift and diffusion of the composite model.

    Each weight ``w_i`` turns into a coupling ``gamma_i^2 = (nu/3pi) xi_i^3 w_i``
    so that sums over modes reproduce the continuum integrals.
    """
    xis = [float(x) for x, _ in mode_grid]
    if any(x <= 0 for x in xis):
        raise ContractError("mode frequencies must be positive")
    if len(set(xis)) != len(xis):
        raise ContractError("duplicate mode frequencies")
    thermostat = spec.thermostat
    modes = []
    for xi, w in mode_grid:
        if w < 0:
            raise ContractError("mode weights must be non-negative")
        gamma = math.sqrt(spec.nu_bar / (3.0 * math.pi) * xi ** 3 * w)
        alpha = delta = 0.0
        if thermostat is Thermostat.RF and spec.mu_bar_scale > 0:
            alpha = spec.mu_bar_scale * xi * bath.principal_P(xi, spec)
            delta = spec.mu_bar_scale * xi * bath.principal_Q(xi, spec)
        modes.append(ModeBlock(
            omega=xi, gamma=gamma, mu=bath.mu_bar(xi, spec),
            N=bath.bose_occupation(xi, spec.beta_hw0), alpha=alpha, delta=delta,
        ))
    return assemble_blocks(modes, thermostat, spec)


def assemble_blocks(modes, thermostat: Thermostat = Thermostat.LB,
                    spec: BathSpec | None = None) -> FiniteSystem:
    """Place per-mode blocks into the full (2N+2)-dimensional matrices."""
    modes = tuple(modes)
    thermostat = Thermostat.parse(thermostat)
    dim = 2 * len(modes) + 2
    F = np.zeros((dim, dim))
    D = np.zeros((dim, dim))
    F[:2, :2] = F_S
    for i, mode in enumerate(modes):
        s = slice(2 + 2 * i, 4 + 2 * i)
        f_off, f_off_tilde, d_off = coupling_blocks(mode.gamma)
        F[:2, s] = f_off
        F[s, :2] = f_off_tilde
        F[s, s] = mode_drift(mode, thermostat)
        D[:2, s] = d_off
        D[s, :2] = d_off.T
        D[s, s] = mode_diffusion(mode, thermostat)
    F.setflags(write=False)
    D.setflags(write=False)
    return FiniteSystem(modes=modes, F=F, D=D, thermostat=thermostat, spec=spec)


def _sylvester_2x2(A: np.ndarray, B: np.ndarray, C: np.ndarray, label: str) -> np.ndarray:
    """Solve ``A X - X B = C`` for 2x2 matrices through the 4x4 Kronecker system."""
    eye = np.eye(2)
    K = np.kron(eye, A) - np.kron(B.T, eye)
    if np.linalg.cond(K) > 1e14:
        raise ResonanceError(f"Sylvester system for {label} is singular (undamped resonance)")
    x = np.linalg.solve(K, C.reshape(-1, order="F"))
    return x.reshape(2, 2, order="F")


def solve_sylvester_pair(mode: ModeBlock, thermostat: Thermostat = Thermostat.LB) -> SylvesterPair:
    """Solve the two per-mode elimination equations.

    ``F_B I1 - I1 F_S = F~_off`` and ``F_B I2 - I2 F_S = (N/2) F_off^T - 2 D_off^T``,
    with the bath precision taken at zeroth order in the damping.
    """
    thermostat = Thermostat.parse(thermostat)
    label = f"mode xi={mode.omega:.12g}"
    if mode.mu < 0:
        raise ContractError(f"{label}: negative damping")
    FB = mode_drift(mode, thermostat)
    f_off, f_off_tilde, d_off = coupling_blocks(mode.gamma)
    rhs1 = f_off_tilde
    rhs2 = 0.5 * mode.N * f_off.T - 2.0 * d_off.T
    if mode.gamma == 0.0:
        zero = np.zeros((2, 2))
        return SylvesterPair(zero, zero.copy(), 0.0, 0.0)
    I1 = _sylvester_2x2(FB, F_S, rhs1, label)
    I2 = _sylvester_2x2(FB, F_S, rhs2, label)
    r1 = float(np.max(np.abs(FB @ I1 - I1 @ F_S - rhs1)))
    r2 = float(np.max(np.abs(FB @ I2 - I2 @ F_S - rhs2)))
    scale = max(1.0, float(np.max(np.abs(I1))), float(np.max(np.abs(I2))))
    if max(r1, r2) > SYLVESTER_RESIDUAL_TOL * scale:
        raise NumericalError(f"{label}: Sylvester residual {max(r1, r2):.3e} too large")
    return SylvesterPair(I1, I2, r1, r2)


def assemble_effective(system: FiniteSystem) -> tuple[np.ndarray, np.ndarray]:
    """Effective 2x2 drift and diffusion obtained by eliminating every mode."""
    F_eff = F_S.copy()
    D_eff = np.zeros((2, 2))
    for mode in system.modes:
        pair = solve_sylvester_pair(mode, system.thermostat)
        f_off, _, _ = coupling_blocks(mode.gamma)
        F_eff -= f_off @ pair.I1
        M = f_off @ pair.I2
        D_eff += 0.5 * (M + M.T)
    return F_eff, D_eff


def effective_model(system: FiniteSystem):
    """EffectiveModel built from the eliminated matrices of a finite system."""
    from .effective import EffectiveModel

    if system.spec is None:
        raise ContractError("the finite system carries no BathSpec")
    F_eff, D_eff = assemble_effective(system)
    return EffectiveModel.from_matrices(F_eff, D_eff, system.spec)


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    system_eigenvalue: complex
    mode_eigenvalues: np.ndarray
    tau_S_inv: float
    tau_B_inv: np.ndarray


def spectrum_and_rates(system: FiniteSystem) -> SpectrumReport:
    """Eigenvalues of the full drift and the relaxation rates they imply.

    Each 2x2 block (system or mode) is matched to the eigenvalue whose
    eigenvector carries most weight on that block's coordinates; only
    eigenvalues with non-negative imaginary part take part, one per
    conjugate pair.
    """
    if system.n_modes < 1:
        raise ContractError("spectrum_and_rates needs at least one mode")
    try:
        vals, vecs = np.linalg.eig(np.asarray(system.F))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigen-solver failed: {exc}") from exc
    order = np.lexsort((vals.imag, vals.real))
    vals, vecs = vals[order], vecs[:, order]
    keep = np.nonzero(vals.imag >= -1e-14)[0]
    weights = np.abs(vecs[:, keep]) ** 2
    weights /= weights.sum(axis=0, keepdims=True)
    nblocks = system.n_modes + 1
    block_weight = weights.reshape(nblocks, 2, -1).sum(axis=1)
    # Tie-break the system assignment toward the eigenvalue nearest frequency 1.
    cost = -block_weight
    cost[0] += 1e-9 * np.abs(vals[keep].imag - 1.0)
    rows, cols = linear_sum_assignment(cost)
    chosen = np.empty(nblocks, dtype=complex)
    chosen[rows] = vals[keep][cols]
    return SpectrumReport(
        eigenvalues=vals,
        system_eigenvalue=complex(chosen[0]),
        mode_eigenvalues=chosen[1:],
        tau_S_inv=2.0 * float(chosen[0].real),
        tau_B_inv=2.0 * chosen[1:].real,
    )


def default_time_step(system: FiniteSystem) -> float:
    """``min(0.01, tau_B / 50)`` with the fastest mode damping setting tau_B."""
    mu_max = max((m.mu for m in system.modes), default=0.0)
    if mu_max <= 0:
        return 0.01
    return min(0.01, 1.0 / (50.0 * mu_max))


def propagate_moments(F: np.ndarray, D: np.ndarray, Sigma0: np.ndarray,
                      mean0: np.ndarray, times, dt: float):
    """Fixed-step RK4 for ``dS/dt = -F S - S F^T + 2D`` and ``dm/dt = -F m``.

    ``times`` must be non-decreasing; the last step before each output time is
    shortened so that every time is hit exactly.  Returns stacked covariances
    and means, one per requested time.
    """
    if not dt > 0:
        raise ContractError("dt must be positive")
    A = -np.asarray(F, dtype=float)
    D2 = 2.0 * np.asarray(D, dtype=float)
    S = np.array(Sigma0, dtype=float)
    m = np.array(mean0, dtype=float)
    times = [float(t) for t in np.atleast_1d(times)]
    if any(t < 0 for t in times) or any(b < a for a, b in zip(times, times[1:])):
        raise ContractError("times must be non-negative and non-decreasing")

    def rhs(X):
        Y = A @ X
        return Y + Y.T + D2

    covs, means = [], []
    t_now = 0.0
    for t_target in times:
        n_steps = int(math.ceil((t_target - t_now) / dt - 1e-9))
        if n_steps > 0:
            h = (t_target - t_now) / n_steps
            Am = A * h
            # Taylor polynomial of exp(h A): RK4 applied to a linear system.
            Am2 = Am @ Am
            P = np.eye(A.shape[0]) + Am + Am2 / 2 + Am2 @ Am / 6 + Am2 @ Am2 / 24
            with np.errstate(over="ignore", invalid="ignore"):
                for k in range(n_steps):
                    k1 = rhs(S)
                    k2 = rhs(S + 0.5 * h * k1)
                    k3 = rhs(S + 0.5 * h * k2)
                    k4 = rhs(S + h * k3)
                    S = S + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                    m = P @ m
                    if k % 256 == 0 and not np.all(np.isfinite(S)):
                        raise NumericalError("non-finite covariance during propagation")
            if not (np.all(np.isfinite(S)) and np.all(np.isfinite(m))):
                raise NumericalError("non-finite state during propagation")
            t_now = t_target
        covs.append(S.copy())
        means.append(m.copy())
    return np.array(covs), np.array(means)


def initial_moments(system: FiniteSystem, r0=(0.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """Delta-distributed system at ``r0`` with every mode in its thermal state."""
    Sigma0 = np.zeros((system.dim, system.dim))
    for i, mode in enumerate(system.modes):
        Sigma0[2 + 2 * i, 2 + 2 * i] = Sigma0[3 + 2 * i, 3 + 2 * i] = 0.5 * mode.N
    mean0 = np.zeros(system.dim)
    mean0[:2] = r0
    return Sigma0, mean0


def propagate_covariance(system: FiniteSystem, Sigma0, mean0, t: float,
                         dt: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Covariance and mean of the composite process at time ``t``."""
    if t < 0:
        raise ContractError("t must be non-negative")
    Sigma0 = np.asarray(Sigma0, dtype=float)
    if Sigma0.shape != (system.dim, system.dim) or not np.allclose(Sigma0, Sigma0.T):
        raise ContractError("Sigma0 must be a symmetric matrix of the system dimension")
    dt = default_time_step(system) if dt is None else dt
    covs, means = propagate_moments(system.F, system.D, Sigma0, mean0, [t], dt)
    return covs[0], means[0]
