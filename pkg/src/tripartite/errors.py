"""Exception hierarchy shared by the library and the command-line front end."""

from __future__ import annotations


class TripartiteError(Exception):
    """Base class for every error raised deliberately by this package."""


class ContractError(TripartiteError, ValueError):
    """An input violates a documented precondition."""


class NumericalError(TripartiteError, RuntimeError):
    """A numerical procedure failed to deliver a trustworthy answer."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge.

    The partially converged estimate is kept on the exception so callers can
    inspect it, but it is never returned silently.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class ExtrapolationError(NumericalError):
    """Richardson extrapolation produced an inconsistent limit."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class ResonanceError(NumericalError):
    """A bath mode sits on resonance with no damping to regularise it."""


class ScaleSeparationError(TripartiteError):
    """The coupling hierarchy required by the marginal theory is violated."""


class TruncationError(NumericalError):
    """A truncated Fock basis is too small for the requested accuracy."""

    def __init__(self, message: str, suggested_n_max: int):
        super().__init__(message)
        self.suggested_n_max = suggested_n_max
