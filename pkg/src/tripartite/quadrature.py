"""One-dimensional adaptive quadrature with Cauchy principal-value support.

Ordinary integrals are delegated to QUADPACK (``scipy.integrate.quad``),
whose adaptive Gauss-Kronrod scheme is deterministic for fixed inputs.  This
module adds a uniform result type, strict failure semantics (a
non-converged integral raises instead of returning a partial value) and a
principal-value routine based on singularity subtraction:

    PV int_a^b g(x) / (x - s) dx
        = g(s) * ln((b - s) / (s - a))
          + int_a^b [g(x) - g(s)] / (x - s) dx

The remainder has a removable singularity at ``s``; the interval is split
there so that no Kronrod node ever lands on it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

from scipy import integrate as sp_integrate

from .errors import ContractError, QuadratureError

DEFAULT_TOL = 1e-10
DEFAULT_TOL_ABS = 1e-14
MAX_SUBDIVISIONS = 2000

Integrand = Callable[[float], float]


@dataclass(frozen=True)
class QuadratureResult:
    """Value of a definite integral with its error estimate."""

    value: float
    error_estimate: float
    evaluations: int

    def __add__(self, other: "QuadratureResult") -> "QuadratureResult":
        return QuadratureResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.evaluations + other.evaluations,
        )

    def scaled(self, factor: float) -> "QuadratureResult":
        return QuadratureResult(
            factor * self.value, abs(factor) * self.error_estimate, self.evaluations
        )


def _quad(f: Integrand, a: float, b: float, tol: float, tol_abs: float,
          points=None) -> QuadratureResult:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sp_integrate.IntegrationWarning)
        out = sp_integrate.quad(
            f, a, b, epsabs=tol_abs, epsrel=tol, limit=MAX_SUBDIVISIONS,
            points=points, full_output=1,
        )
    value, err, info = out[0], out[1], out[2]
    neval = int(info["neval"])
    partial = QuadratureResult(float(value), float(abs(err)), max(neval, 1))
    if len(out) > 3:
        # QUADPACK sets ier > 0 and appends a message when it gives up.  Accept
        # the answer only if the error estimate still meets the request, which
        # happens when round-off stalls refinement of an already converged sum.
        if not (math.isfinite(value) and abs(err) <= max(tol * abs(value), tol_abs)):
            raise QuadratureError(
                f"quadrature on [{a}, {b}] did not converge: {out[3].strip()}",
                partial=partial,
            )
    if not math.isfinite(value):
        raise QuadratureError(f"non-finite integral on [{a}, {b}]", partial=partial)
    return partial


def integrate(f: Integrand, a: float, b: float, tol: float = DEFAULT_TOL,
           tol_abs: float = DEFAULT_TOL_ABS, points=None) -> QuadratureResult:
    """Integrate a regular function over ``[a, b]``.

    ``points`` may list interior break points (kinks, narrow peaks) that the
    adaptive scheme should respect from the start.
    """
    if not a < b:
        raise ContractError(f"integration bounds must satisfy a < b, got {a}, {b}")
    if tol <= 0:
        raise ContractError("tol must be positive")
    if points is not None:
        points = sorted(p for p in points if a < p < b) or None
    return _quad(f, a, b, tol, tol_abs, points)


def pv_integrate(g: Integrand, singularity: float, a: float, b: float,
                 tol: float = DEFAULT_TOL, tol_abs: float = DEFAULT_TOL_ABS,
                 points=None) -> QuadratureResult:
    """Cauchy principal value of ``int_a^b g(x) / (x - singularity) dx``.

    ``g`` is the smooth numerator; the simple pole is supplied by this routine.
    """
    s = float(singularity)
    if not a < s < b:
        raise ContractError(f"singularity {s} must lie strictly inside ({a}, {b})")
    if tol <= 0:
        raise ContractError("tol must be positive")
    gs = float(g(s))
    if not math.isfinite(gs):
        raise QuadratureError(f"numerator is not finite at the pole x={s}")

    def remainder(x: float) -> float:
        dx = x - s
        if dx == 0.0:
            return 0.0
        return (g(x) - gs) / dx

    breaks = [s]
    if points is not None:
        breaks.extend(p for p in points if a < p < b and p != s)
    res = _quad(remainder, a, b, tol, tol_abs, sorted(breaks))
    log_part = gs * math.log((b - s) / (s - a))
    return QuadratureResult(res.value + log_part, res.error_estimate, res.evaluations + 1)
