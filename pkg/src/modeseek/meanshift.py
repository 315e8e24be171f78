"""Mean-shift iteration, stopping rules and mode-based clustering."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .density import DensityModel, _point, batch_state, kde_value
from .errors import DomainError, NumericalFailure

__all__ = [
    "MSConfig",
    "Trajectory",
    "ClusterResult",
    "STOP_REASONS",
    "ms_step",
    "ms_run",
    "cluster",
    "write_trajectory_csv",
]

STOP_REASONS = ("step_below_tolerance", "exact_fixed_point", "f_check_zero", "max_iterations")


@dataclass(frozen=True)
class MSConfig:
    step_tolerance: float = 1e-12
    max_iterations: int = 100_000
    over_relaxation: float = 1.0
    record_trajectory: bool = True

    def __post_init__(self):
        if not 0.0 < self.over_relaxation < 2.0:
            raise DomainError("over-relaxation must lie in (0, 2)")
        if not self.step_tolerance > 0:
            raise DomainError("step tolerance must be positive")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise DomainError("max_iterations must be a positive integer")


@dataclass
class Trajectory:
    """Recorded states of one mean-shift run.

    Row ``k`` holds iterate ``y[k]`` at time ``t[k]`` together with its density,
    the norm of the step taken from it, the gradient norm and ``f_check``.  The
    last row's ``step_norm`` is the step that triggered the stop (0 for the
    ``f_check_zero`` branch, where no step is defined).
    """

    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    step_norm: np.ndarray
    grad_norm: np.ndarray
    f_check: np.ndarray
    stop_reason: str
    over_relaxation: float = 1.0
    start_density_zero: bool = False
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def final(self) -> np.ndarray:
        return self.y[-1]

    @property
    def iterations(self) -> int:
        return int(self.t[-1])

    @property
    def converged(self) -> bool:
        return self.stop_reason != "max_iterations"


def _weights(model: DensityModel, y: np.ndarray) -> np.ndarray:
    return model.grad_coef * model.kernel.subgradient_profile(model.sq_half(y))


def ms_step(model: DensityModel, y) -> np.ndarray:
    """One mean-shift update; returns ``y`` unchanged when ``f_check(y) == 0``."""
    y = _point(model, y)
    c = _weights(model, y)
    total = c.sum()
    if total == 0.0:
        return y.copy()
    return (c @ model.dataset.points) / total


def ms_run(model: DensityModel, start, config: MSConfig | None = None, *, seed: int | None = None) -> Trajectory:
    """Iterate mean shift from ``start`` until a stopping rule fires.

    Density, gradient norm and ``f_check`` for the recorded iterates are
    evaluated in one vectorized pass after the loop.
    """
    config = config or MSConfig()
    y = _point(model, start).copy()
    X = model.dataset.points
    d = model.d
    # [X | 1] so one mat-vec yields both the weighted sum and the total weight
    Xa = np.hstack([X, np.ones((model.n, 1))])
    ones_d = np.ones(d)
    coef = model.grad_coef
    uniform = bool(np.all(coef == coef[0]))
    inv2h2 = model.inv_two_h2
    if np.all(inv2h2 == inv2h2[0]):
        inv2h2 = float(inv2h2[0])
    sub = model.kernel.subgradient_profile
    zeta = float(config.over_relaxation)
    tol = float(config.step_tolerance)
    record = config.record_trajectory

    ys: list[np.ndarray] = []
    steps: list[float] = []
    reason = "max_iterations"
    t = 0
    for t in range(1, int(config.max_iterations) + 1):
        diff = X - y
        c = sub((diff * diff) @ ones_d * inv2h2)
        if not uniform:
            c = c * coef
        r = c @ Xa
        total = r[d]
        if total == 0.0:
            step_norm = 0.0
            y_next = y
            reason = "f_check_zero"
        else:
            mean = r[:d] / total
            y_next = mean if zeta == 1.0 else y + zeta * (mean - y)
            delta = y_next - y
            step_norm = math.sqrt(float(delta @ delta))
            if not math.isfinite(step_norm):
                raise NumericalFailure(t, seed)
            if step_norm == 0.0:
                reason = "exact_fixed_point"
            elif step_norm <= tol:
                reason = "step_below_tolerance"
        if record or reason != "max_iterations" or t == config.max_iterations:
            ys.append(y)
            steps.append(step_norm)
        if reason != "max_iterations":
            break
        y = y_next
    if not record:
        ys, steps = ys[-1:], steps[-1:]
        ts = np.array([t], dtype=np.int64)
    else:
        ts = np.arange(1, len(ys) + 1, dtype=np.int64)

    Y = np.array(ys).reshape(len(ys), model.d)
    f, fc, _, gnorm = batch_state(model, Y)
    start_zero = kde_value(model, start) == 0.0
    return Trajectory(
        t=ts,
        y=Y,
        f=f,
        step_norm=np.array(steps),
        grad_norm=gnorm,
        f_check=fc,
        stop_reason=reason,
        over_relaxation=zeta,
        start_density_zero=start_zero,
    )


@dataclass
class ClusterResult:
    labels: np.ndarray
    modes: np.ndarray
    seed_modes: np.ndarray
    stop_reasons: list[str]
    iterations: np.ndarray

    @property
    def n_clusters(self) -> int:
        return self.modes.shape[0]


def _thread_cap() -> int:
    cap = os.environ.get("MODESEEK_THREADS")
    default = os.cpu_count() or 1
    if cap is None:
        return default
    try:
        return max(1, min(default, int(cap)))
    except ValueError:
        return 1


def cluster(
    model: DensityModel,
    config: MSConfig | None = None,
    merge_tolerance: float | None = None,
    max_workers: int | None = None,
) -> ClusterResult:
    """Run mean shift from every data point and merge nearby limits.

    Limits within ``merge_tolerance`` of each other are joined by single
    linkage; labels are numbered by the lowest seed index in each group and
    each mode is the mean of its group's limits.
    """
    base = config or MSConfig()
    run_cfg = MSConfig(base.step_tolerance, base.max_iterations, base.over_relaxation, False)
    if merge_tolerance is None:
        merge_tolerance = 1e-6 * model.dataset.diameter
    if merge_tolerance < 0:
        raise DomainError("merge tolerance must be non-negative")
    X = model.dataset.points
    workers = max_workers or _thread_cap()

    def one(i):
        return ms_run(model, X[i], run_cfg, seed=i)

    if workers > 1 and model.n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(one, range(model.n)))
    else:
        runs = [one(i) for i in range(model.n)]

    limits = np.array([r.final for r in runs])
    n = limits.shape[0]
    pairs = cKDTree(limits).query_pairs(merge_tolerance, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, comp = connected_components(graph, directed=False)
    # renumber components by first seed index
    order: dict[int, int] = {}
    labels = np.empty(n, dtype=np.int64)
    for i, c in enumerate(comp):
        labels[i] = order.setdefault(int(c), len(order))
    modes = np.array([limits[labels == k].mean(axis=0) for k in range(len(order))])
    return ClusterResult(
        labels=labels,
        modes=modes,
        seed_modes=limits,
        stop_reasons=[r.stop_reason for r in runs],
        iterations=np.array([r.iterations for r in runs]),
    )


def _fmt(v: float) -> str:
    return repr(float(v))


def write_trajectory_csv(traj: Trajectory, path: str | Path, metadata: dict | None = None) -> Path:
    """Write ``t, y1..yd, f, step_norm, grad_norm, f_check`` plus a JSON sidecar.

    The sidecar sits next to the CSV with suffix ``.json`` and carries the stop
    reason and any extra ``metadata``.  Returns the sidecar path.
    """
    path = Path(path)
    d = traj.y.shape[1]
    header = ["t"] + [f"y{j + 1}" for j in range(d)] + ["f", "step_norm", "grad_norm", "f_check"]
    lines = [",".join(header)]
    for k in range(len(traj)):
        row = [str(int(traj.t[k]))]
        row += [_fmt(v) for v in traj.y[k]]
        row += [_fmt(traj.f[k]), _fmt(traj.step_norm[k]), _fmt(traj.grad_norm[k]), _fmt(traj.f_check[k])]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    side = {
        "stop_reason": traj.stop_reason,
        "iterations": traj.iterations,
        "over_relaxation": traj.over_relaxation,
        "start_density_zero": traj.start_density_zero,
    }
    side.update(traj.meta)
    if metadata:
        side.update(metadata)
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps(side, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return sidecar
