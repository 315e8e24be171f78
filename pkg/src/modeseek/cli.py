"""Command-line interface.

    modeseek run --data pts.csv --kernel gaussian --bandwidth 0.5 --out results/
    modeseek figure2 --case all --out fig2/
    modeseek kernels --dim 2

Exit codes: 0 success, 1 input error, 2 iteration cap reached (``run``) or a
failed comparison (``figure2``).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .density import DensityModel, load_dataset_csv
from .diagnostics import loja_exponent_bound, rate_report
from .errors import ModeSeekError
from .figure2 import CASES, run_case, write_case
from .kernels import KERNEL_NAMES, get_kernel
from .meanshift import MSConfig, cluster, ms_run, write_trajectory_csv

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2


def _err(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_INPUT


def _fmt(v: float) -> str:
    return repr(float(v))


def _parse_start(text: str, d: int) -> np.ndarray | None:
    if text.strip().lower() == "each-datapoint":
        return None
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ModeSeekError(f"--start must be 'each-datapoint' or comma-separated numbers, got {text!r}") from None
    if len(vals) != d:
        raise ModeSeekError(f"--start has {len(vals)} coordinates but the data has d={d}")
    return np.array(vals)


def cmd_run(args) -> int:
    try:
        kernel = get_kernel(args.kernel)
    except ModeSeekError as exc:
        return _err(str(exc))
    try:
        data = load_dataset_csv(args.data)
        model = DensityModel(data, kernel, args.bandwidth, normalized=args.normalized)
        config = MSConfig(args.tol, args.max_iter, args.zeta)
        start = _parse_start(args.start, data.d)
    except ModeSeekError as exc:
        return _err(str(exc))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if start is None:
        res = cluster(model, config, args.merge_tol)
        d = data.d
        lines = [",".join(["index", "label"] + [f"y{j + 1}" for j in range(d)] + ["iterations", "stop_reason"])]
        for i in range(data.n):
            lines.append(",".join(
                [str(i), str(int(res.labels[i]))] + [_fmt(v) for v in res.seed_modes[i]]
                + [str(int(res.iterations[i])), res.stop_reasons[i]]
            ))
        (out / "assignments.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        mlines = [",".join(["label"] + [f"y{j + 1}" for j in range(d)])]
        for k, mode in enumerate(res.modes):
            mlines.append(",".join([str(k)] + [_fmt(v) for v in mode]))
        (out / "modes.csv").write_text("\n".join(mlines) + "\n", encoding="utf-8")
        capped = sum(r == "max_iterations" for r in res.stop_reasons)
        summary = {"n_clusters": res.n_clusters, "n_seeds": data.n, "seeds_at_max_iterations": capped,
                   "kernel": kernel.name, "bandwidth": args.bandwidth, "over_relaxation": args.zeta}
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(f"{res.n_clusters} cluster(s) from {data.n} seeds")
        return EXIT_NOT_CONVERGED if capped else EXIT_OK

    traj = ms_run(model, start, config)
    write_trajectory_csv(traj, out / "trajectory.csv", {"kernel": kernel.name, "bandwidth": args.bandwidth})
    if traj.converged:
        rate_report(model, traj).write(out / "rate_report.json")
    print(f"{traj.stop_reason} after {traj.iterations} iteration(s) at {[float(v) for v in traj.final]}")
    return EXIT_OK if traj.converged else EXIT_NOT_CONVERGED


def cmd_figure2(args) -> int:
    cases = CASES if args.case == "all" else (args.case,)
    status = EXIT_OK
    for case in cases:
        try:
            result = run_case(case, max_iterations=args.max_iter)
        except ModeSeekError as exc:
            return _err(f"case {case}: {exc}")
        write_case(result, args.out)
        s = result.summary()
        if case == "i":
            detail = f"q_hat={s['fitted_q']:.6f} predicted={s['predicted_q']:.6f}"
        else:
            detail = (f"slopes=({s['fitted_position_slope']:.4f}, {s['fitted_value_slope']:.4f}) "
                      f"predicted=({-s['predicted_position_slope']:.4f}, {-s['predicted_value_slope']:.4f})")
        print(f"case {case}: {'PASS' if result.passed else 'FAIL'} {detail}")
        if not result.passed:
            status = EXIT_NOT_CONVERGED
    return status


def _mark(flag: bool) -> str:
    return "yes" if flag else "no"


def cmd_kernels(args) -> int:
    d = args.dim
    header = ["kernel", "profile", "asm2", "asm3", "asm4", "convergence", "rate", "worst_case", f"exp_bound_d{d}"]
    rows = []
    for name in KERNEL_NAMES:
        k = get_kernel(name)
        bound = loja_exponent_bound(k, d)
        rows.append([
            k.name, k.formula, _mark(k.satisfies_asm2), _mark(k.satisfies_asm3), _mark(k.satisfies_asm4),
            k.convergence, k.rate, k.worst_case_bound, "-" if bound is None else f"{bound:.6g}",
        ])
    widths = [max(len(str(r[i])) for r in rows + [header]) for i in range(len(header))]
    for r in [header] + rows:
        print("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="modeseek", description="Mean-shift mode seeking and convergence diagnostics")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run mean shift on a CSV dataset")
    r.add_argument("--data", required=True)
    r.add_argument("--kernel", default="gaussian")
    r.add_argument("--bandwidth", type=float, default=1.0)
    r.add_argument("--start", default="each-datapoint", help="'each-datapoint' or comma-separated coordinates")
    r.add_argument("--zeta", type=float, default=1.0, help="over-relaxation factor in (0, 2)")
    r.add_argument("--tol", type=float, default=1e-12)
    r.add_argument("--max-iter", type=int, default=100_000)
    r.add_argument("--merge-tol", type=float, default=None)
    r.add_argument("--normalized", action="store_true")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    f = sub.add_parser("figure2", help="reproduce the degenerate-Hessian convergence experiments")
    f.add_argument("--case", choices=CASES + ("all",), default="all")
    f.add_argument("--max-iter", type=int, default=None)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_figure2)

    k = sub.add_parser("kernels", help="print the kernel catalog and assumption flags")
    k.add_argument("--dim", type=int, default=1)
    k.set_defaults(func=cmd_kernels)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
