"""Convergence-rate prediction and empirical rate fitting for mean shift.

Prediction works through the Jacobian of the map ``y -> y + m(y)`` at a
critical point: its largest eigenvalue ``q`` is the linear rate when the
Hessian there is non-degenerate.  For degenerate critical points the rate is
governed by the Lojasiewicz exponent ``theta`` of the density, for which only
user-supplied values and the piecewise-polynomial upper bound are handled.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .density import (
    DensityModel,
    _point,
    _second_terms,
    batch_state,
    curvature,
    f_check,
    kde_gradient,
    kde_hessian,
    kde_value,
)
from .errors import DomainError, HessianUnavailable, InsufficientData, JacobianUndefined
from .kernels import KernelSpec, get_kernel
from .meanshift import Trajectory

__all__ = [
    "RateReport",
    "LinearRate",
    "RateFit",
    "AuditReport",
    "jacobian_at",
    "jacobian_via_hessian",
    "linear_rate",
    "loja_exponent_bound",
    "loja_exponent_bound_local_max",
    "classify_rate",
    "fit_empirical_rates",
    "audit_trajectory",
    "rate_report",
]

GRADIENT_TOLERANCE = 1e-8
DEGENERATE_THRESHOLD = 1e-9
DISTANCE_FLOOR = 1e-12
MIN_FIT_STATES = 20


def jacobian_at(model: DensityModel, y) -> np.ndarray:
    """Jacobian of the mean-shift map from the second profile derivative.

    Evaluates ``sum_i K''(u_i) (x_i - y)(x_i - y)^T / (h^2 sum_i Kcheck(u_i))``
    (bandwidth-weighted per point when per-point bandwidths are set).  At a
    critical point this is the derivative of ``y -> y + m(y)``.
    """
    y = _point(model, y)
    u, k2 = _second_terms(model, y)
    sub = model.kernel.subgradient_profile(u)
    denom = float(model.grad_coef @ sub)
    if denom == 0.0:
        raise JacobianUndefined("f_check vanishes; the mean-shift map is the identity branch")
    r = model.dataset.points - y
    w = model.value_coef * k2 / model.h ** 4
    J = np.einsum("i,ij,ik->jk", w, r, r) / denom
    return 0.5 * (J + J.T)


def jacobian_via_hessian(model: DensityModel, y) -> np.ndarray:
    """``I + H(y) / curvature(y)``; equals ``I + h^2 H / f_check`` for one bandwidth."""
    y = _point(model, y)
    H = kde_hessian(model, y)
    c = curvature(model, y)
    if c == 0.0:
        raise JacobianUndefined("f_check vanishes; the mean-shift map is the identity branch")
    return np.eye(model.d) + H / c


@dataclass
class LinearRate:
    q: float | None
    hessian_eigenvalue: float
    degenerate: bool
    f_check: float


def linear_rate(model: DensityModel, y_bar) -> LinearRate:
    """Predicted linear rate ``q = 1 + lambda / curvature`` at a critical point.

    ``lambda`` is the largest Hessian eigenvalue.  When it is zero to within
    ``1e-9 * curvature`` or positive, the point is flagged degenerate and
    ``q`` is ``None``.
    """
    y_bar = _point(model, y_bar)
    g = kde_gradient(model, y_bar)
    if np.linalg.norm(g) > GRADIENT_TOLERANCE:
        raise DomainError(f"not a critical point: |grad f| = {np.linalg.norm(g):.3e}")
    H = kde_hessian(model, y_bar)
    c = curvature(model, y_bar)
    if c == 0.0:
        raise JacobianUndefined("f_check vanishes at the limit point")
    lam = float(np.linalg.eigvalsh(H)[-1])
    fc = f_check(model, y_bar)
    if lam >= -DEGENERATE_THRESHOLD * c:
        return LinearRate(None, lam, True, fc)
    q = 1.0 + lam / c
    if not -1e-10 <= q <= 1.0:
        raise AssertionError(f"predicted rate {q} outside [0, 1]")
    return LinearRate(min(max(q, 0.0), 1.0), lam, False, fc)


def _degree_terms(k: int, d: int) -> float:
    return max(k * (3 * k - 4) ** (d - 1), 2 * k * float(3 * k - 3) ** (d - 2))


def loja_exponent_bound(kernel: KernelSpec | str, d: int) -> float | None:
    """Upper bound on the Lojasiewicz exponent of a piecewise-polynomial KDE.

    ``1 - 1 / max{k (3k-4)^(d-1), 2k (3k-3)^(d-2)}`` for a C^1 kernel of
    maximum degree ``k >= 2``; ``None`` when the kernel does not qualify.
    """
    kernel = get_kernel(kernel)
    if d < 1:
        raise DomainError("dimension must be positive")
    k = kernel.max_poly_degree
    if k is None or k < 2 or not kernel.is_c1:
        return None
    return 1.0 - 1.0 / _degree_terms(k, d)


def loja_exponent_bound_local_max(kernel: KernelSpec | str, d: int) -> float | None:
    """Sharper bound ``1 - 1/((k-1)^d + 1)``, valid only at a local maximum
    interior to one polynomial piece.  Never applied automatically."""
    kernel = get_kernel(kernel)
    k = kernel.max_poly_degree
    if k is None or k < 2 or not kernel.is_c1:
        return None
    return 1.0 - 1.0 / ((k - 1) ** d + 1)


@dataclass(frozen=True)
class RateClass:
    rate_class: str
    position_slope: float | None
    value_slope: float | None


def classify_rate(theta: float) -> RateClass:
    """Map a Lojasiewicz exponent to finite / linear / polynomial convergence.

    Polynomial slopes are the decay exponents of ``|y_bar - y_t|`` and
    ``f(y_bar) - f(y_t)`` in ``t``: ``(1-theta)/(2theta-1)`` and ``1/(2theta-1)``.
    """
    if not (0.0 <= theta < 1.0):
        raise DomainError("theta must lie in [0, 1)")
    if theta < 0.5:
        return RateClass("finite", None, None)
    if theta == 0.5:
        return RateClass("linear", None, None)
    return RateClass("polynomial", (1.0 - theta) / (2.0 * theta - 1.0), 1.0 / (2.0 * theta - 1.0))


@dataclass
class RateFit:
    finite: bool
    position_slope: float | None = None
    value_slope: float | None = None
    q_hat: float | None = None
    fit_window: tuple[int, int] | None = None
    value_fit_window: tuple[int, int] | None = None


def _tail_slope(t: np.ndarray, v: np.ndarray):
    half = len(t) // 2
    tt, vv = t[half:], v[half:]
    slope = np.polyfit(np.log(tt), np.log(vv), 1)[0]
    return float(slope), (int(tt[0]), int(tt[-1])), half


def fit_empirical_rates(
    trajectory: Trajectory,
    y_bar,
    f_bar: float | None = None,
    model: DensityModel | None = None,
) -> RateFit:
    """Least-squares log-log slopes and median successive ratio over the tail.

    Usable states are those farther than 1e-12 from ``y_bar``; the window is
    the last half of them.  The value gap needs ``f_bar`` (or a ``model`` to
    evaluate it); without either the value slope is left out.
    """
    y_bar = np.atleast_1d(np.asarray(y_bar, dtype=float))
    if trajectory.stop_reason == "exact_fixed_point":
        dist_last = float(np.linalg.norm(trajectory.final - y_bar))
        if dist_last <= DISTANCE_FLOOR:
            return RateFit(finite=True)
    dist = np.linalg.norm(trajectory.y - y_bar, axis=1)
    usable = np.flatnonzero(dist > DISTANCE_FLOOR)
    if usable.size < MIN_FIT_STATES:
        raise InsufficientData(f"{usable.size} usable states; need {MIN_FIT_STATES}")
    t = trajectory.t[usable].astype(float)
    pos_slope, window, half = _tail_slope(t, dist[usable])

    win = usable[half:]
    consecutive = win[:-1][np.diff(win) == 1]
    ratios = dist[consecutive + 1] / dist[consecutive]
    q_hat = float(np.median(ratios)) if ratios.size else None

    if f_bar is None and model is not None:
        f_bar = kde_value(model, y_bar)
    value_slope = value_window = None
    if f_bar is not None:
        gap = f_bar - trajectory.f
        ok = np.flatnonzero(gap > 64 * np.finfo(float).eps * abs(f_bar))
        if ok.size >= MIN_FIT_STATES:
            value_slope, value_window, _ = _tail_slope(trajectory.t[ok].astype(float), gap[ok])
    return RateFit(False, pos_slope, value_slope, q_hat, window, value_window)


@dataclass
class AuditReport:
    steps: int
    ascent_violations: int
    increase_violations: int
    identity_violations: int
    worst_ascent: float
    worst_increase: float
    worst_identity: float
    min_f_check: float
    identity_floor_steps: int = 0

    @property
    def passed(self) -> bool:
        return not (self.ascent_violations or self.increase_violations or self.identity_violations)


def audit_trajectory(model: DensityModel, trajectory: Trajectory, tol: float = 1e-10) -> AuditReport:
    """Recheck ascent, sufficient increase and the gradient-step identity per step.

    Every quantity is recomputed from the stored iterates.  For over-relaxation
    ``zeta`` the sufficient-increase coefficient becomes
    ``(2 - zeta) / zeta * curvature / 2`` and the identity
    ``|dy| * curvature = zeta * |grad f|``.  Worst values are the largest
    shortfalls (ascent, increase) and largest relative mismatch (identity).
    ``identity_floor_steps`` counts steps so short that rounding of the
    iterates, not ``tol``, sets the identity tolerance.
    """
    Y = trajectory.y
    zeta = trajectory.over_relaxation
    f, fc, curv, gnorm = batch_state(model, Y)
    if len(trajectory) < 2:
        return AuditReport(0, 0, 0, 0, 0.0, 0.0, 0.0, float(fc.min()))
    df = np.diff(f)
    delta = np.linalg.norm(np.diff(Y, axis=0), axis=1)
    c = curv[:-1]

    ascent_gap = -df
    increase_gap = (2.0 - zeta) / zeta * 0.5 * c * delta ** 2 - df

    lhs = delta * c
    rhs = zeta * gnorm[:-1]
    # each iterate is a weighted mean of the data, rounded at the scale of the
    # larger of |y| and |x_i|; below that |dy| is not resolvable
    mag = np.maximum(np.abs(Y[:-1]).max(axis=1), np.abs(Y[1:]).max(axis=1))
    mag = np.maximum(mag, float(np.abs(model.dataset.points).max()))
    floor = 4.0 * np.finfo(float).eps * math.sqrt(model.d) * mag * c
    scale = np.maximum(np.maximum(lhs, rhs), np.finfo(float).tiny)
    gap = np.abs(lhs - rhs)
    rel = np.where(gap <= floor, 0.0, gap / scale)

    return AuditReport(
        steps=len(df),
        ascent_violations=int(np.sum(ascent_gap > tol)),
        increase_violations=int(np.sum(increase_gap > tol)),
        identity_violations=int(np.sum(rel > tol)),
        worst_ascent=float(max(ascent_gap.max(), 0.0)),
        worst_increase=float(max(increase_gap.max(), 0.0)),
        worst_identity=float(rel.max()),
        min_f_check=float(fc.min()),
        identity_floor_steps=int(np.sum(floor > tol * scale)),
    )


@dataclass
class RateReport:
    limit_point: list[float]
    largest_hessian_eigenvalue: float | None
    predicted_q: float | None
    loja_exponent: float | None
    rate_class: str | None
    predicted_position_slope: float | None
    predicted_value_slope: float | None
    fitted_position_slope: float | None
    fitted_value_slope: float | None
    fitted_q: float | None
    fit_window: list[int] | None
    value_fit_window: list[int] | None
    loja_exponent_bound: float | None
    stop_reason: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")


def rate_report(
    model: DensityModel,
    trajectory: Trajectory,
    y_bar=None,
    theta: float | None = None,
) -> RateReport:
    """Assemble predicted and fitted convergence behaviour for one run.

    Predicted slopes are decay exponents (positive); fitted slopes are the
    measured log-log slopes and so come out negative.

    ``y_bar`` defaults to the final iterate.  Without a supplied ``theta`` the
    exponent is taken as 1/2 when the Hessian at the limit is non-degenerate
    (linear rate) and the run did not hit an exact fixed point, and is left
    undetermined otherwise.
    """
    y_bar = trajectory.final if y_bar is None else _point(model, y_bar)
    lam = q = None
    degenerate = None
    try:
        lr = linear_rate(model, y_bar)
        lam, q, degenerate = lr.hessian_eigenvalue, lr.q, lr.degenerate
    except (HessianUnavailable, JacobianUndefined, DomainError):
        pass
    # an exact fixed point means finite convergence, even where q = 0 looks linear
    if theta is None and degenerate is False and trajectory.stop_reason != "exact_fixed_point":
        theta = 0.5
    if theta is not None:
        cls = classify_rate(theta)
        rate_class, pos_pred, val_pred = cls.rate_class, cls.position_slope, cls.value_slope
    else:
        rate_class = "finite" if trajectory.stop_reason == "exact_fixed_point" else None
        pos_pred = val_pred = None

    try:
        fit = fit_empirical_rates(trajectory, y_bar, model=model)
    except InsufficientData:
        fit = RateFit(finite=False)
    if fit.finite and rate_class is None:
        rate_class = "finite"
    return RateReport(
        limit_point=[float(v) for v in y_bar],
        largest_hessian_eigenvalue=lam,
        predicted_q=q,
        loja_exponent=theta,
        rate_class=rate_class,
        predicted_position_slope=pos_pred,
        predicted_value_slope=val_pred,
        fitted_position_slope=fit.position_slope,
        fitted_value_slope=fit.value_slope,
        fitted_q=fit.q_hat,
        fit_window=None if fit.fit_window is None else list(fit.fit_window),
        value_fit_window=None if fit.value_fit_window is None else list(fit.value_fit_window),
        loja_exponent_bound=loja_exponent_bound(model.kernel, model.d),
        stop_reason=trajectory.stop_reason,
    )
