"""Exception types raised across the package."""

from __future__ import annotations


class ModeSeekError(Exception):
    """Base class for all package errors."""


class DomainError(ModeSeekError, ValueError):
    """An argument lies outside the domain of the operation."""


class DataFormatError(ModeSeekError, ValueError):
    """A dataset file could not be parsed.

    ``row`` is the 1-based line number in the file when known.
    """

    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class HessianUnavailable(ModeSeekError):
    """Second derivatives are not defined at the requested point.

    ``index`` names the data point whose offset sits on a profile knot.
    """

    def __init__(self, index: int | None, reason: str = "Hessian not defined here"):
        detail = reason if index is None else f"{reason} (data index {index})"
        super().__init__(detail)
        self.index = index


class JacobianUndefined(ModeSeekError):
    """The mean-shift map has no Jacobian at this point (zero curvature)."""


class NumericalFailure(ModeSeekError, ArithmeticError):
    """A non-finite value appeared during iteration ``iteration``."""

    def __init__(self, iteration: int, seed: int | None = None):
        msg = f"non-finite iterate at iteration {iteration}"
        if seed is not None:
            msg += f" (seed index {seed})"
        super().__init__(msg)
        self.iteration = iteration
        self.seed = seed


class InsufficientData(ModeSeekError):
    """Too few usable trajectory states for a rate fit."""


class NoConvergence(ModeSeekError):
    """The Newton solver failed; ``residuals`` holds the last residual vector."""

    def __init__(self, message: str, residuals):
        super().__init__(f"{message}; last residuals {list(residuals)}")
        self.residuals = residuals
