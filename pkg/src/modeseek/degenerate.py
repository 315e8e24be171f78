"""Symmetric Gaussian datasets whose KDE is flat to high order at the origin.

For data ``{+p_j, -p_j}`` with a unit-bandwidth Gaussian kernel, every odd
derivative of the KDE vanishes at 0 and the even ones are proportional to

    R_2r(p) = sum_j He_2r(p_j) phi(p_j)

with ``phi`` the standard normal density.  Choosing positions so that
``R_2, ..., R_2m`` vanish while ``R_{2m+2} < 0`` makes the origin a mode whose
first non-zero derivative has order ``2m + 2``, so the Lojasiewicz exponent
there is ``1 - 1/(2m + 2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .density import DataSet, hermite_e
from .errors import DomainError, NoConvergence

__all__ = [
    "DegenerateConfig",
    "REFERENCE_POSITIONS",
    "even_derivative_residuals",
    "solve_degenerate_config",
]

# Three-decimal positions for m = 1, 2, 3 (n = 2, 6, 6 data points).
REFERENCE_POSITIONS: dict[int, tuple[float, ...]] = {
    1: (1.0,),
    2: (0.564, 1.721, 2.801),
    3: (0.651, 1.959, 3.243),
}

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _phi(p: np.ndarray) -> np.ndarray:
    return _INV_SQRT_2PI * np.exp(-0.5 * p * p)


@dataclass(frozen=True)
class DegenerateConfig:
    positions: tuple[float, ...]
    m: int
    leading_order: int
    theta: float
    residuals: tuple[float, ...]
    leading_residual: float

    @property
    def points(self) -> np.ndarray:
        p = np.asarray(self.positions)
        return np.concatenate([p, -p])

    def dataset(self) -> DataSet:
        return DataSet(self.points)

    def to_json(self) -> str:
        return json.dumps(
            {
                "positions": list(self.positions),
                "m": self.m,
                "vanish_order": 2 * self.m + 1,
                "leading_order": self.leading_order,
                "theta": self.theta,
                "residuals": list(self.residuals),
                "leading_residual": self.leading_residual,
            },
            indent=2,
            sort_keys=True,
        ) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")


def even_derivative_residuals(positions, orders) -> np.ndarray:
    """``sum_j He_k(p_j) phi(p_j)`` for each even order ``k``."""
    p = np.asarray(positions, dtype=float).reshape(-1)
    if p.size == 0 or np.any(p <= 0):
        raise DomainError("positions must be positive")
    out = []
    for k in orders:
        if int(k) != k or k < 0 or k % 2:
            raise DomainError(f"order {k} is not even; odd derivatives vanish identically")
        out.append(float(np.sum(hermite_e(int(k), p) * _phi(p))))
    return np.array(out)


def _residual_jacobian(p: np.ndarray, orders) -> np.ndarray:
    # d/dp [He_k(p) phi(p)] = -He_{k+1}(p) phi(p)
    return np.array([-hermite_e(k + 1, p) * _phi(p) for k in orders])


def _newton(p0: np.ndarray, free: np.ndarray, orders, max_iter: int = 200, target: float = 1e-14):
    p = p0.copy()
    r = even_derivative_residuals(p, orders)
    norm = np.linalg.norm(r)
    for _ in range(max_iter):
        if norm <= target:
            break
        J = _residual_jacobian(p, orders)[:, free]
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        while lam > 1e-12:
            trial = p.copy()
            trial[free] += lam * step
            if np.all(trial > 0):
                r_trial = even_derivative_residuals(trial, orders)
                n_trial = np.linalg.norm(r_trial)
                if n_trial < norm:
                    p, r, norm = trial, r_trial, n_trial
                    break
            lam *= 0.5
        else:
            break  # no decrease possible: stationary to machine precision
    return p, r


def solve_degenerate_config(m: int, seed_positions=None, tol: float = 1e-10) -> DegenerateConfig:
    """Positions making the first ``2m + 1`` derivatives vanish at the origin.

    ``m = 1`` returns the single pair at 1 exactly.  For ``m = 2`` three pairs
    are used with the first position held at its seed (the system is
    underdetermined); for ``m = 3`` all three positions are solved for.  Seeds
    default to :data:`REFERENCE_POSITIONS`.
    """
    if m not in REFERENCE_POSITIONS:
        raise DomainError("m must be 1, 2 or 3")
    seeds = np.asarray(seed_positions if seed_positions is not None else REFERENCE_POSITIONS[m], dtype=float)
    orders = [2 * r for r in range(1, m + 1)]
    if m == 1:
        if seed_positions is not None and not (seeds.size == 1):
            raise DomainError("m = 1 uses a single pair")
        p = np.array([1.0])
        r = even_derivative_residuals(p, orders)
    else:
        if seeds.size != 3:
            raise DomainError(f"m = {m} needs three seed positions")
        free = np.arange(3) if m == 3 else np.arange(1, 3)
        p, r = _newton(seeds, free, orders)
        if not np.all(np.abs(r) <= tol):
            raise NoConvergence("Newton iteration did not reach the residual tolerance", r)
    if np.any(np.diff(p) <= 0) or np.any(p <= 0):
        raise NoConvergence("solution positions are not positive and strictly increasing", r)
    lead = float(even_derivative_residuals(p, [2 * m + 2])[0])
    if not lead < 0:
        raise NoConvergence(f"order-{2 * m + 2} residual is not negative ({lead})", r)
    return DegenerateConfig(
        positions=tuple(float(v) for v in p),
        m=m,
        leading_order=2 * m + 2,
        theta=1.0 - 1.0 / (2 * m + 2),
        residuals=tuple(float(v) for v in r),
        leading_residual=lead,
    )
