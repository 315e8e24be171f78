"""The ten acceptance criteria, each printing one PASS/FAIL line."""

import time

import numpy as np
import pytest

from conftest import random_model
from modeseek.degenerate import solve_degenerate_config
from modeseek.density import DataSet, DensityModel, kde_value, knot_hit, minorizer_value
from modeseek.diagnostics import audit_trajectory, jacobian_at, jacobian_via_hessian, loja_exponent_bound
from modeseek.errors import JacobianUndefined
from modeseek.figure2 import run_case
from modeseek.kernels import get_kernel
from modeseek.meanshift import MSConfig, ms_run, ms_step

AUDIT_KERNELS = ["gaussian", "biweight", "triweight", "epanechnikov", "cauchy", "logistic"]
SMOOTH = ["gaussian", "biweight", "triweight", "cauchy", "logistic"]


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail

    return emit


def _slopes_ok(fit, pos, val):
    return (
        fit.position_slope is not None and abs(fit.position_slope + pos) <= 0.1 * pos
        and fit.value_slope is not None and abs(fit.value_slope + val) <= 0.1 * val
    )


def test_criterion_01_pair_linear_rate(report):
    t0 = time.perf_counter()
    res = run_case("i")
    elapsed = time.perf_counter() - t0
    q = res.fit.q_hat
    ok = abs(res.trajectory.final[0]) < 1e-9 and q is not None and 0.9015 <= q <= 0.9035 and elapsed < 1.0
    report(1, ok, f"q_hat={q:.6f} final={res.trajectory.final[0]:.2e} time={elapsed:.2f}s")


def test_criterion_02_degenerate_m1(report):
    t0 = time.perf_counter()
    res = run_case("ii")
    elapsed = time.perf_counter() - t0
    ok = _slopes_ok(res.fit, 0.5, 2.0) and elapsed < 5.0
    report(2, ok, f"slopes=({res.fit.position_slope:.4f}, {res.fit.value_slope:.4f}) time={elapsed:.2f}s")


def test_criterion_03_degenerate_m2(report):
    cfg = solve_degenerate_config(2, seed_positions=[0.564, 1.721, 2.801])
    pos_ok = cfg.positions[0] == 0.564 and np.allclose(cfg.positions[1:], [1.721, 2.801], rtol=0, atol=1e-3)
    res = run_case("iii")
    ok = pos_ok and _slopes_ok(res.fit, 0.25, 1.5)
    report(3, ok, f"positions={[round(p, 4) for p in cfg.positions]} "
                  f"slopes=({res.fit.position_slope:.4f}, {res.fit.value_slope:.4f})")


def test_criterion_04_degenerate_m3(report):
    cfg = solve_degenerate_config(3, seed_positions=[0.65, 1.96, 3.24])
    pos_ok = np.allclose(cfg.positions, [0.651, 1.959, 3.243], rtol=0, atol=1e-3)
    res = run_case("iv")
    ok = pos_ok and _slopes_ok(res.fit, 1 / 6, 4 / 3)
    report(4, ok, f"positions={[round(p, 4) for p in cfg.positions]} "
                  f"slopes=({res.fit.position_slope:.4f}, {res.fit.value_slope:.4f})")


def test_criterion_05_epanechnikov_finite(report):
    rng = np.random.default_rng(505)
    kernel = get_kernel("epanechnikov")
    worst, bad, runs = 0, 0, 0
    for k in range(50):
        d = 1 + k % 2
        n = int(rng.integers(1, 51))
        pts = rng.normal(size=(n, d)) * rng.uniform(0.5, 3.0)
        m = DensityModel(DataSet(pts), kernel, float(rng.uniform(0.3, 2.0)))
        for i in range(n):
            traj = ms_run(m, pts[i], MSConfig(max_iterations=200, record_trajectory=False))
            runs += 1
            worst = max(worst, traj.iterations)
            if traj.stop_reason != "exact_fixed_point" or traj.step_norm[-1] != 0.0:
                bad += 1
    report(5, bad == 0, f"{runs} runs, {bad} without an exact fixed point, max iterations {worst}")


def _audited_runs():
    rng = np.random.default_rng(606)
    for k in range(100):
        d = 1 + k % 3
        pts_n = int(rng.integers(2, 25))
        weights = bool(k % 2)
        for name in AUDIT_KERNELS:
            m = random_model(rng, name, n=pts_n, d=d, weights=weights, h=float(rng.uniform(0.7, 2.0)))
            for seed in range(min(3, m.n)):
                yield m, ms_run(m, m.dataset.points[seed])


@pytest.fixture(scope="module")
def audits():
    return [audit_trajectory(m, traj, tol=1e-10) for m, traj in _audited_runs()]


def test_criterion_06_ascent_and_increase(report, audits):
    asc = sum(a.ascent_violations for a in audits)
    inc = sum(a.increase_violations for a in audits)
    steps = sum(a.steps for a in audits)
    worst = max(max(a.worst_ascent, a.worst_increase) for a in audits)
    report(6, asc == 0 and inc == 0,
           f"{len(audits)} runs, {steps} steps, ascent violations {asc}, increase violations {inc}, worst {worst:.1e}")


def test_criterion_07_gradient_step_identity(report, audits):
    bad = sum(a.identity_violations for a in audits)
    steps = sum(a.steps for a in audits)
    floored = sum(a.identity_floor_steps for a in audits)
    report(7, bad == 0, f"{len(audits)} runs, identity violations {bad}; {steps - floored} of {steps} steps "
                        f"checked at 1e-10 relative, {floored} at the rounding floor")


def test_criterion_08_jacobian(report):
    rng = np.random.default_rng(808)
    worst_diff, done = 0.0, 0
    while done < 100:
        m = random_model(rng, SMOOTH[done % len(SMOOTH)], bandwidths=bool(rng.integers(2)),
                         weights=bool(rng.integers(2)))
        y = rng.uniform(-2, 2, size=m.d)
        if knot_hit(m, y, tol=1e-6) is not None:
            continue
        try:
            a = jacobian_at(m, y)
        except JacobianUndefined:
            continue
        worst_diff = max(worst_diff, float(np.abs(a - jacobian_via_hessian(m, y)).max()))
        done += 1
    lo, hi, maxima = np.inf, -np.inf, 0
    for k in range(100):
        m = random_model(rng, SMOOTH[k % len(SMOOTH)], n=int(rng.integers(1, 12)), d=1 + k % 2, h=1.0)
        traj = ms_run(m, m.dataset.points[0])
        if traj.stop_reason != "step_below_tolerance" or knot_hit(m, traj.final) is not None:
            continue
        ev = np.linalg.eigvalsh(jacobian_via_hessian(m, traj.final))
        lo, hi, maxima = min(lo, ev.min()), max(hi, ev.max()), maxima + 1
    ok = worst_diff <= 1e-8 and lo >= -1e-10 and hi <= 1 + 1e-10 and maxima >= 50
    report(8, ok, f"max entry gap {worst_diff:.1e} over {done} configs; eigenvalues in [{lo:.3g}, {hi:.6g}] "
                  f"at {maxima} maxima")


def test_criterion_09_exponent_bound(report):
    got = (loja_exponent_bound("biweight", 1), loja_exponent_bound("triweight", 1), loja_exponent_bound("biweight", 2))
    # direct substitution: 1 - 1/4, 1 - 1/6, 1 - 1/32
    want = (1 - 1 / 4, 1 - 1 / 6, 1 - 1 / 32)
    ok = all(abs(g - w) <= 1e-12 for g, w in zip(got, want))
    report(9, ok, f"bounds={got}")


def test_criterion_10_minorizer_and_scaling(report):
    rng = np.random.default_rng(1010)
    kernels = ["gaussian", "epanechnikov", "biweight", "triweight", "cauchy", "logistic", "cosine", "threehalves"]
    dom_bad = tan_bad = scale_bad = 0
    for k in range(1000):
        m = random_model(rng, kernels[k % len(kernels)], weights=bool(rng.integers(2)),
                         bandwidths=bool(rng.integers(2)))
        x, y = rng.uniform(-3, 3, size=(2, m.d))
        dom_bad += minorizer_value(m, x, y) > kde_value(m, x) + 1e-12
        tan_bad += abs(minorizer_value(m, y, y) - kde_value(m, y)) > 1e-15
        c = float(np.exp(rng.uniform(-5, 5)))
        mc = DensityModel(m.dataset, m.kernel.scaled(c), m.bandwidth)
        a, b = ms_step(m, y), ms_step(mc, y)
        scale_bad += float(np.abs(a - b).max()) > 1e-12 * max(1.0, float(np.abs(a).max()))
    ok = dom_bad == tan_bad == scale_bad == 0
    report(10, ok, f"1000 draws: dominance failures {dom_bad}, tangency failures {tan_bad}, scaling failures {scale_bad}")
