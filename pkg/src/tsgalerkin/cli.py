"""Command line: ``tsgalerkin {run,eoc,interp-test,bounds-check,trace-check}``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""
import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .config import help_epilog, parse_config
from .coupling import build_operators
from .errors import NumericalError, PreconditionError, ValidationError
from .solver import SolverConfig, Snapshots, TimeSeries, bounds_for, run, stable_dt, write_macro_csv
from .verify import kconst
from .verify.bounds import BoundsMonitor
from .verify.eoc import level_spaces, run_eoc
from .verify.interp import ESTIMATES, interpolation_rate_test
from .verify.mms import MmsForcing
from .verify.norms import ErrorAccumulator
from .verify.trace import random_fields, trace_inequality_check

COMMANDS = ("run", "eoc", "interp-test", "bounds-check", "trace-check")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tsgalerkin", description=__doc__.splitlines()[0],
        epilog=help_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="INI file; defaults apply to absent keys")
    parser.add_argument("--levels", type=int, help="override [verify] levels")
    parser.add_argument("--threads", type=int, help="override [solver] threads")
    parser.add_argument("--out", type=Path, help="override [output] directory")
    return parser


def _spaces(cfg):
    omega, cell = cfg.geometry()
    m = cfg["mesh"]
    return next(level_spaces(omega, cell, m["nx"], m["ny"], 1, m["gamma_r"], m["cell_nx"], m["cell_ny"]))


def _solver_config(cfg, params, ops, **extra):
    s = cfg["solver"]
    common = dict(scheme=s["scheme"], picard_tol=s["picard_tol"], picard_max=s["picard_max"],
                  cg_tol=s["cg_tol"], lumped_mass=s["lumped_mass"], bound_tol=s["bound_tol"],
                  threads=s["threads"], **extra)
    if s["dt"] != "auto":
        return SolverConfig(dt=s["dt"], T=s["T"], **common)
    # the admissible dt depends on the bounds, which depend on the horizon
    dt = stable_dt(params, ops, *bounds_for(params, ops, s["T"])[1:])
    dt = min(dt, stable_dt(params, ops, *bounds_for(params, ops, dt * s["steps"])[1:]))
    if not math.isfinite(dt):
        dt = s["T"] / s["steps"]
    return SolverConfig(dt=dt, T=dt * s["steps"], **common)


def _simulate(cfg, out):
    params = cfg.params()
    ms, ys = _spaces(cfg)
    ops = build_operators(ms, ys)
    mms = cfg["model"]["preset"] == "mms"
    forcing = MmsForcing(cfg.exact(), params, ms, ys) if mms else None
    scfg = _solver_config(cfg, params, ops, forcing=forcing)
    m1, m2, m3 = bounds_for(params, ops, scfg.T)
    monitor = BoundsMonitor(m1, m2, m3, cfg["solver"]["bound_tol"])
    series = TimeSeries(ops)
    observers = [series, monitor]
    acc = None
    if mms:
        acc = ErrorAccumulator(cfg.exact(), ms, ys, scfg.dt_effective)
        observers.append(acc)
    stride = cfg["output"]["stride"]
    if stride:
        snap = out / "snapshots"
        snap.mkdir(exist_ok=True)
        observers.append(Snapshots(snap, stride, ms))
    result = run(params, ops, scfg, observers)
    with open(out / "timeseries.csv", "w") as fh:
        series.write(fh)
    with open(out / "bounds.csv", "w") as fh:
        monitor.write_csv(fh)
    with open(out / "violations.csv", "w") as fh:
        monitor.write_violations(fh)
    with open(out / "U_final.csv", "w") as fh:
        write_macro_csv(result.state, ms, fh)
    return result, monitor, acc


def cmd_run(cfg, out):
    result, monitor, acc = _simulate(cfg, out)
    U, u, v = result.state.fields
    line = (f"run: {result.n_steps} steps, dt={result.dt:.4g}, t={result.state.t:.4g}, "
            f"U in [{U.min():.4g}, {U.max():.4g}], u in [{u.min():.4g}, {u.max():.4g}], "
            f"v in [{v.min():.4g}, {v.max():.4g}], {monitor.count} violations")
    if acc is not None:
        errs = acc.result()
        line += ", " + ", ".join(f"{k}={errs[k]:.4e}" for k in ("e_U_H1", "e_u_L2H1y", "e_v_L2H1y"))
    print(line)
    return 0


def cmd_bounds_check(cfg, out):
    _, monitor, _ = _simulate(cfg, out)
    print(f"bounds-check: m=({monitor.m1:.4g}, {monitor.m2:.4g}, {monitor.m3:.4g}), "
          f"{len(monitor.rows) - 1} steps, {monitor.count} violations")
    return 0


def _interp(cfg, levels):
    omega, cell = cfg.geometry()
    m = cfg["mesh"]
    return interpolation_rate_test(levels, m["nx"], omega=omega, cell=cell, gamma=m["gamma_r"])


def cmd_interp_test(cfg, out, levels):
    report = _interp(cfg, levels)
    with open(out / "rates.csv", "w") as fh:
        report.write_csv(fh)
    parts = [f"{k} rate {report.fitted_rate(k):.3f} gamma {report.gamma(k):.4g}" for k in ESTIMATES]
    print("interp-test: " + "; ".join(parts))
    return 0


def cmd_eoc(cfg, out, levels):
    v, m = cfg["verify"], cfg["mesh"]
    omega, cell = cfg.geometry()
    exact = cfg.exact()
    params = exact.params(cfg.params())
    report = _interp(cfg, levels)
    g1, g3 = report.gamma("i1"), report.gamma("i3")
    table = run_eoc(exact, params, levels, omega, cell, nx=m["nx"], ny=m["ny"], T=v["T"],
                    dt_const=v["dt_const"], gamma=m["gamma_r"], scheme=cfg["solver"]["scheme"],
                    cg_tol=cfg["solver"]["cg_tol"], threads=cfg["solver"]["threads"], gammas=(g1, g3))
    ms, ys = next(level_spaces(omega, cell, m["nx"], m["ny"], 1, m["gamma_r"]))
    _, m2, m3 = bounds_for(params, build_operators(ms, ys), v["T"])
    K = kconst.estimate_K(exact.h2_profiles(v["T"]), params, g1, g3, m2, m3).value
    rows = kconst.bound_rows(table, K)
    with open(out / "eoc.csv", "w") as fh:
        table.write_csv(fh)
    with open(out / "rates.csv", "w") as fh:
        report.write_csv(fh)
    with open(out / "kconst.csv", "w") as fh:
        kconst.write_csv(fh, rows)
    table.write_h_error(out)
    worst = max(r["ratio"] for r in rows)
    a6 = all(r["a6_ok"] for r in table.rows)
    print(f"eoc: worst observed rate {table.worst_rate(('e_U_H1', 'e_u_L2H1y', 'e_v_L2H1y')):.3f} "
          f"(L2 {table.worst_rate(('e_U_L2', 'e_u_L2', 'e_v_L2')):.3f}), K={K:.4g}, "
          f"max err^2/(K h^2)={worst:.4g}, h^2 max(g1,g3)<1: {'yes' if a6 else 'FLAGGED'}")
    return 0


def cmd_trace_check(cfg, out):
    v = cfg["verify"]
    ms, ys = _spaces(cfg)
    ops = build_operators(ms, ys)
    samples = random_fields(ops, v["samples"], np.random.default_rng(v["seed"]))
    report = trace_inequality_check(samples, ops, v["eps"])
    with open(out / "trace.csv", "w") as fh:
        report.write_csv(fh)
    consts = ", ".join(f"C({e:g})={c:.4g}" for e, c in zip(report.eps, report.constants))
    print(f"trace-check: {consts}; finite={report.finite}, monotone={report.monotone}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            try:
                text = args.config.read_text(encoding="utf-8")
            except OSError as exc:
                raise ValidationError(f"cannot read config: {exc}") from None
        else:
            text = ""
        cfg = parse_config(text)
        if args.threads is not None:
            if args.threads < 1:
                raise ValidationError("--threads must be >= 1")
            cfg["solver"]["threads"] = args.threads
        levels = cfg["verify"]["levels"] if args.levels is None else args.levels
        out = args.out or Path(cfg["output"]["directory"])
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.ini").write_text(cfg.emit(), encoding="utf-8")
        if args.command == "run":
            return cmd_run(cfg, out)
        if args.command == "bounds-check":
            return cmd_bounds_check(cfg, out)
        if args.command == "trace-check":
            return cmd_trace_check(cfg, out)
        if args.command == "interp-test":
            return cmd_interp_test(cfg, out, levels)
        return cmd_eoc(cfg, out, levels)
    except (ValidationError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
