"""Command-line driver: scenario runs, profile comparison, diagnostics.

``momentflow run`` builds a scenario config from a preset, an optional flat
config file and flag overrides, runs the chosen solver, and writes CSV
profile snapshots plus a plain-text run log.  ``momentflow compare``
measures the difference between two profile files column by column.

Thread control: ``--threads`` pins the usual BLAS/OpenMP pool sizes via the
environment before the numerical modules are imported; all reductions in the
solvers are order-deterministic, so results do not depend on the setting.
"""

import argparse
import os
import sys

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def decay_diagnostic(state):
    """Mean |f_alpha| per order k = 1..M of one state (length-M array)."""
    import numpy as np

    from .moments import order_cube

    K = state.coeffs.shape[-1]
    orders = order_cube(K)
    out = np.empty(K - 2)
    mag = np.abs(state.coeffs)
    for k in range(1, K - 1):
        out[k - 1] = mag[orders == k].mean()
    return out


def build_parser():
    p = argparse.ArgumentParser(
        prog="momentflow", description="1-D kinetic microflow solvers"
    )
    sub = p.add_subparsers(dest="command")

    r = sub.add_parser("run", help="run a scenario and write CSV profiles")
    r.add_argument("--scenario", choices=("shock", "couette", "poiseuille", "custom"),
                   default=None)
    r.add_argument("--config", default=None, help="flat key = value config file")
    r.add_argument("--solver", choices=("nrxx", "cdvm"), default=None)
    r.add_argument("--M", type=int, default=None, help="moment order")
    r.add_argument("--kn", type=float, default=None)
    r.add_argument("--pr", type=float, default=None)
    r.add_argument("--chi", type=float, default=None)
    r.add_argument("--cells", type=int, default=None)
    r.add_argument("--tend", type=float, default=None)
    r.add_argument("--steady-tol", type=float, default=None)
    r.add_argument("--max-steps", type=int, default=None)
    r.add_argument("--limiter", choices=("none", "central", "minmod"), default=None)
    r.add_argument("--splitting", choices=("lie", "strang"), default=None)
    r.add_argument("--closure-location", choices=("interface", "cell"), default=None)
    r.add_argument("--snapshot-interval", type=int, default=None)
    r.add_argument("--dv-nodes", type=int, nargs=3, default=None)
    r.add_argument("--dv-half-width", type=float, default=None)
    r.add_argument("--out", default=None, help="output directory")
    r.add_argument("--threads", type=int, default=None)

    c = sub.add_parser("compare", help="difference report between two profiles")
    c.add_argument("file_a")
    c.add_argument("file_b", help="reference profile")
    c.add_argument("--norm", choices=("l2rel", "l2", "linf"), default="l2rel")
    c.add_argument("--columns", nargs="*", default=None)
    return p


_FLAG_TO_FIELD = {
    "scenario": "scenario",
    "solver": "solver",
    "M": "M",
    "kn": "kn",
    "pr": "pr",
    "chi": "chi",
    "cells": "cells",
    "tend": "t_end",
    "steady_tol": "steady_tol",
    "max_steps": "max_steps",
    "limiter": "limiter",
    "splitting": "splitting",
    "closure_location": "closure_location",
    "snapshot_interval": "snapshot_interval",
    "dv_half_width": "dv_half_width",
    "out": "out_dir",
}


def _collect_overrides(args):
    over = {}
    for flag, fieldname in _FLAG_TO_FIELD.items():
        val = getattr(args, flag)
        if val is not None:
            over[fieldname] = val
    if args.dv_nodes is not None:
        over["dv_nodes"] = tuple(args.dv_nodes)
    return over


def _cmd_run(args):
    if args.threads is not None:
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)

    import numpy as np

    from . import scenarios
    from .cdvm import dv_run, dv_snapshot_table
    from .moments import write_table
    from .solver1d import run as nrxx_run
    from .moments import snapshot_table

    over = _collect_overrides(args)
    over.pop("scenario", None)
    if args.config is not None:
        sc = scenarios.load_config(args.config, **over)
    else:
        sc = scenarios.preset(args.scenario or "custom", **over)

    out = sc.out_dir
    os.makedirs(out, exist_ok=True)
    scenarios.save_config(sc, os.path.join(out, "config.ini"))
    interval = sc.snapshot_interval or None

    if sc.solver == "nrxx":
        grid = scenarios.build_grid(sc)
        cfg = scenarios.to_run_config(sc)
        result = nrxx_run(grid, cfg, snapshot_interval=interval)
        final = snapshot_table(grid.centers, grid.u, grid.theta, grid.coeffs)
        residuals = result.residual_history
        dts = result.dt_history
    else:
        dv = scenarios.build_dv_field(sc)
        cfg = scenarios.to_dv_config(sc)
        result = dv_run(dv, cfg, snapshot_interval=interval)
        final = dv_snapshot_table(dv)
        residuals = result.residual_history
        dts = np.array([])

    for i, (t, table) in enumerate(result.snapshots[:-1]):
        write_table(os.path.join(out, "snapshot_%04d.csv" % i), table)
    write_table(os.path.join(out, "final.csv"), final)

    with open(os.path.join(out, "run_log.txt"), "w") as log:
        log.write("scenario=%s solver=%s M=%d kn=%g\n" % (sc.scenario, sc.solver,
                                                          sc.M, sc.kn))
        log.write("steps=%d t=%.12g converged=%s\n" % (result.steps, result.t,
                                                       result.converged))
        log.write("message: %s\n" % result.message)
        if dts.size:
            log.write("dt history:\n")
            for i, dt in enumerate(dts):
                log.write("  step %d dt %.12g\n" % (i + 1, dt))
        if residuals.size:
            log.write("residual history:\n")
            for i, res in enumerate(residuals):
                log.write("  check %d residual %.6g\n" % (i + 1, res))
    if sc.steady_tol is not None and residuals.size:
        np.savetxt(
            os.path.join(out, "residual_history.csv"),
            np.column_stack([np.arange(1, residuals.size + 1), residuals]),
            fmt="%.17g",
            delimiter=",",
            header="check,residual",
            comments="",
        )

    print(
        "%s/%s: %d steps to t=%.6g (%s); wrote %s"
        % (sc.scenario, sc.solver, result.steps, result.t, result.message, out)
    )
    if not result.converged:
        print("warning: %s" % result.message, file=sys.stderr)
    return 0


def _cmd_compare(args):
    import numpy as np

    from .moments import SNAPSHOT_COLUMNS, read_snapshot

    a = read_snapshot(args.file_a)
    b = read_snapshot(args.file_b)
    cols = args.columns or [c for c in SNAPSHOT_COLUMNS if c != "y"]
    worst = 0.0
    for col in cols:
        if col not in a or col not in b:
            print("missing column %s" % col, file=sys.stderr)
            return 1
        ref = np.interp(a["y"], b["y"], b[col])
        diff = a[col] - ref
        if args.norm == "linf":
            val = np.max(np.abs(diff))
        elif args.norm == "l2":
            val = float(np.linalg.norm(diff))
        else:
            denom = float(np.linalg.norm(ref))
            val = float(np.linalg.norm(diff)) / (denom if denom > 0 else 1.0)
        worst = max(worst, val)
        print("%-10s %s %.6e" % (col, args.norm, val))
    print("%-10s %s %.6e" % ("max", args.norm, worst))
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        try:
            return _cmd_run(args)
        except Exception as exc:          # configuration or solver failure
            print("error: %s" % exc, file=sys.stderr)
            return 1
    if args.command == "compare":
        return _cmd_compare(args)
    parser.print_help()
    return 2


if __name__ == "__main__":
    sys.exit(main())
