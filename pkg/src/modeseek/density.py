"""Kernel density estimates and the quantities mean shift is built from.

For data ``x_i`` with weights ``w_i`` and bandwidths ``h_i`` (all equal to the
model bandwidth unless per-point values are given) the density is

    f(x) = (Z / n) * sum_i w_i h_i^-d profile(|x - x_i|^2 / (2 h_i^2))

with ``Z`` the kernel normalization (1 for unnormalized models).  The
subgradient-weighted analogue ``f_check`` replaces ``profile`` by the
subgradient profile, and ``curvature`` is the coefficient that turns the
gradient into the mean-shift step: ``m(y) = grad f(y) / curvature(y)``.  With
a single bandwidth ``curvature == f_check / h**2``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DataFormatError, DomainError, HessianUnavailable
from .kernels import KNOT_TOLERANCE, KernelSpec, get_kernel, normalization_constant

__all__ = [
    "DataSet",
    "DensityModel",
    "load_dataset_csv",
    "kde_value",
    "kde_gradient",
    "kde_hessian",
    "f_check",
    "curvature",
    "minorizer_value",
    "kde_derivative_1d",
    "knot_hit",
    "hermite_e",
]


@dataclass(frozen=True, eq=False)
class DataSet:
    """Data points with optional positive weights and per-point bandwidths."""

    points: np.ndarray
    weights: np.ndarray | None = None
    bandwidths: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise DomainError("points must be a non-empty n x d array")
        if not np.all(np.isfinite(pts)):
            raise DomainError("all coordinates must be finite")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        for attr in ("weights", "bandwidths"):
            val = getattr(self, attr)
            if val is None:
                continue
            arr = np.array(val, dtype=float).reshape(-1)
            if arr.shape[0] != pts.shape[0]:
                raise DomainError(f"{attr} must have one entry per point")
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise DomainError(f"all {attr} must be positive and finite")
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def diameter(self) -> float:
        pts = self.points
        if pts.shape[0] == 1:
            return 0.0
        from scipy.spatial.distance import pdist

        return float(pdist(pts).max())


def load_dataset_csv(path: str | Path) -> DataSet:
    """Read a dataset CSV with header ``x1..xd`` and optional ``weight``/``bandwidth``."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise DataFormatError("empty file", row=1)
    header = [h.strip().lower() for h in rows[0]]
    coord_cols = [i for i, h in enumerate(header) if h.startswith("x")]
    expected = [f"x{j + 1}" for j in range(len(coord_cols))]
    if not coord_cols or [header[i] for i in coord_cols] != expected:
        raise DataFormatError("header must contain columns x1..xd", row=1)
    known = set(expected) | {"weight", "bandwidth"}
    unknown = [h for h in header if h not in known]
    if unknown:
        raise DataFormatError(f"unknown columns {unknown}", row=1)
    w_col = header.index("weight") if "weight" in header else None
    b_col = header.index("bandwidth") if "bandwidth" in header else None
    if len(rows) < 2:
        raise DataFormatError("no data rows", row=2)

    pts, weights, bws = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataFormatError(f"expected {len(header)} fields, got {len(row)}", row=lineno)
        try:
            vals = [float(cell) for cell in row]
        except ValueError as exc:
            raise DataFormatError(str(exc), row=lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise DataFormatError("non-finite value", row=lineno)
        pts.append([vals[i] for i in coord_cols])
        if w_col is not None:
            if vals[w_col] <= 0:
                raise DataFormatError("weights must be positive", row=lineno)
            weights.append(vals[w_col])
        if b_col is not None:
            if vals[b_col] <= 0:
                raise DataFormatError("bandwidths must be positive", row=lineno)
            bws.append(vals[b_col])
    return DataSet(
        np.array(pts),
        np.array(weights) if w_col is not None else None,
        np.array(bws) if b_col is not None else None,
    )


@dataclass(frozen=True, eq=False)
class DensityModel:
    """A kernel density estimate over a dataset."""

    dataset: DataSet
    kernel: KernelSpec
    bandwidth: float = 1.0
    normalized: bool = False

    def __post_init__(self):
        if not isinstance(self.dataset, DataSet):
            object.__setattr__(self, "dataset", DataSet(self.dataset))
        object.__setattr__(self, "kernel", get_kernel(self.kernel))
        if not (math.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise DomainError("bandwidth must be positive")

    @property
    def d(self) -> int:
        return self.dataset.d

    @property
    def n(self) -> int:
        return self.dataset.n

    @cached_property
    def h(self) -> np.ndarray:
        """Per-point bandwidths (the model bandwidth repeated when absent)."""
        if self.dataset.bandwidths is not None:
            return np.asarray(self.dataset.bandwidths)
        return np.full(self.n, float(self.bandwidth))

    @cached_property
    def scale(self) -> float:
        return normalization_constant(self.kernel, self.d) if self.normalized else 1.0

    @cached_property
    def value_coef(self) -> np.ndarray:
        w = self.dataset.weights if self.dataset.weights is not None else np.ones(self.n)
        return self.scale / self.n * w * self.h ** (-self.d)

    @cached_property
    def grad_coef(self) -> np.ndarray:
        return self.value_coef / self.h ** 2

    @cached_property
    def inv_two_h2(self) -> np.ndarray:
        return 0.5 / self.h ** 2

    def sq_half(self, x: np.ndarray) -> np.ndarray:
        """Scaled squared-half-distances ``|x - x_i|^2 / (2 h_i^2)`` (shape (..., n))."""
        diff = x[..., None, :] - self.dataset.points
        return np.einsum("...ij,...ij->...i", diff, diff) * self.inv_two_h2


def _point(model: DensityModel, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (model.d,):
        raise DomainError(f"expected a point in R^{model.d}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("point must be finite")
    return x


def kde_value(model: DensityModel, x) -> float:
    x = _point(model, x)
    u = model.sq_half(x)
    return float(model.value_coef @ model.kernel.profile(u))


def f_check(model: DensityModel, x) -> float:
    """Subgradient-weighted density; its vanishing triggers the stop branch."""
    x = _point(model, x)
    u = model.sq_half(x)
    return float(model.value_coef @ model.kernel.subgradient_profile(u))


def curvature(model: DensityModel, x) -> float:
    """Coefficient ``c`` with ``m(x) = grad f(x) / c``; equals ``f_check / h**2``."""
    x = _point(model, x)
    u = model.sq_half(x)
    return float(model.grad_coef @ model.kernel.subgradient_profile(u))


def kde_gradient(model: DensityModel, x) -> np.ndarray:
    """Gradient of the KDE built from the subgradient profile.

    At non-smooth points of compact kernels this is the one-sided value given
    by the right-derivative convention; use :func:`knot_hit` to detect them.
    """
    x = _point(model, x)
    u = model.sq_half(x)
    c = model.grad_coef * model.kernel.subgradient_profile(u)
    return c @ (model.dataset.points - x)


def knot_hit(model: DensityModel, x, tol: float = KNOT_TOLERANCE) -> int | None:
    """Index of the first data point whose offset from ``x`` sits on a profile knot."""
    x = _point(model, x)
    hits = np.flatnonzero(model.kernel.has_knot_near(model.sq_half(x), tol))
    return int(hits[0]) if hits.size else None


def _second_terms(model: DensityModel, x: np.ndarray):
    if model.kernel.second_profile_derivative is None:
        raise HessianUnavailable(None, f"{model.kernel.name} has no second profile derivative")
    idx = knot_hit(model, x)
    if idx is not None:
        raise HessianUnavailable(idx)
    u = model.sq_half(x)
    return u, model.kernel.second_profile_derivative(u)


def kde_hessian(model: DensityModel, x) -> np.ndarray:
    """Hessian matrix of the KDE; raises :class:`HessianUnavailable` on knots."""
    x = _point(model, x)
    u, k2 = _second_terms(model, x)
    r = x - model.dataset.points
    outer_w = model.value_coef * k2 / model.h ** 4
    H = np.einsum("i,ij,ik->jk", outer_w, r, r)
    H -= np.eye(model.d) * float(model.grad_coef @ model.kernel.subgradient_profile(u))
    return 0.5 * (H + H.T)


def minorizer_value(model: DensityModel, x, y) -> float:
    """Quadratic minorizer of the KDE anchored at ``y``, evaluated at ``x``."""
    x = _point(model, x)
    y = _point(model, y)
    uy = model.sq_half(y)
    ux = model.sq_half(x)
    sub = model.kernel.subgradient_profile(uy)
    return float(model.value_coef @ (model.kernel.profile(uy) + sub * (uy - ux)))


def hermite_e(m: int, z):
    """Probabilists' Hermite polynomial ``He_m(z)`` by the three-term recurrence."""
    z = np.asarray(z, dtype=float)
    prev, cur = np.ones_like(z), z.copy()
    if m == 0:
        return prev
    for k in range(1, m):
        prev, cur = cur, z * cur - k * prev
    return cur


# FD stencils applied to the (exact) gradient; entry j is the derivative order.
_STENCILS = {
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
}


def _fd_gradient_derivative(model: DensityModel, order: int, x: float) -> float:
    if order == 0:
        return float(kde_gradient(model, [x])[0])
    # Richardson-extrapolated O(h^2) stencil: optimal step ~ eps^(1/(order+4)) in bandwidth units
    step = np.finfo(float).eps ** (1.0 / (order + 4)) * float(model.h.min())

    def central(hh):
        acc = 0.0
        for k, c in _STENCILS[order]:
            acc += c * float(kde_gradient(model, [x + k * hh])[0])
        return acc / hh ** order

    coarse, fine = central(step), central(0.5 * step)
    return (4.0 * fine - coarse) / 3.0


def kde_derivative_1d(model: DensityModel, order: int, x: float, method: str | None = None) -> float:
    """``order``-th derivative of a one-dimensional KDE at ``x``.

    ``method`` is ``"hermite"`` (Gaussian kernel only), ``"fd"`` (any kernel,
    ``order <= 4``) or ``None`` to pick Hermite when possible.
    """
    if model.d != 1:
        raise DomainError("kde_derivative_1d requires d == 1")
    if order < 0 or int(order) != order:
        raise DomainError("order must be a non-negative integer")
    x = float(_point(model, x)[0])
    if method is None:
        method = "hermite" if model.kernel.name == "gaussian" else "fd"
    if method == "hermite":
        if model.kernel.name != "gaussian":
            raise DomainError("the Hermite path needs the Gaussian kernel")
        h = model.h
        z = (x - model.dataset.points[:, 0]) / h
        terms = hermite_e(order, z) * np.exp(-0.5 * z * z) * h ** (-order)
        return float((-1) ** order * (model.value_coef @ terms))
    if method == "fd":
        if order == 0:
            return kde_value(model, [x])
        if order > 4:
            raise DomainError("finite-difference derivatives are supported up to order 4")
        return _fd_gradient_derivative(model, order - 1, x)
    raise DomainError(f"unknown method {method!r}")


def batch_state(model: DensityModel, Y: np.ndarray):
    """Density, f_check, curvature and gradient norm at many points ``Y`` (m x d)."""
    Y = np.asarray(Y, dtype=float)
    chunk = max(1, (1 << 22) // (model.n * model.d))
    m = Y.shape[0]
    f = np.empty(m)
    fc = np.empty(m)
    curv = np.empty(m)
    gnorm = np.empty(m)
    X = model.dataset.points
    prof = model.kernel.profile
    sub = model.kernel.subgradient_profile
    for lo in range(0, m, chunk):
        Yc = Y[lo:lo + chunk]
        u = model.sq_half(Yc)
        s = sub(u)
        f[lo:lo + chunk] = prof(u) @ model.value_coef
        fc[lo:lo + chunk] = s @ model.value_coef
        cw = s * model.grad_coef
        curv[lo:lo + chunk] = cw.sum(axis=1)
        g = np.einsum("mi,mid->md", cw, X[None, :, :] - Yc[:, None, :])
        gnorm[lo:lo + chunk] = np.linalg.norm(g, axis=1)
    return f, fc, curv, gnorm
