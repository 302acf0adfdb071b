"""Command line driver: simulate, cross-check, benchmark, validate.

Exit codes: 0 success, 1 configuration or solver error, 2 comparison
failure (threshold exceeded or runs that describe different problems).
"""

from __future__ import annotations

import argparse
import logging
import statistics
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .observables import compare as compare_traces
from .observables import ensemble_stats
from .output import (
    OutputError,
    read_meta,
    read_run_dir,
    write_ensemble_csv,
    write_errors_csv,
    write_run_dir,
)
from .reference import solve_reference
from .solver import TimestepError, build_lattice, estimate_u_max, run, run_ensemble, validate_timestep


def _load(args) -> RunConfig:
    return load_config(args.config).with_overrides(
        seed=getattr(args, "seed", None),
        out_dir=getattr(args, "out", None),
        strict=True if getattr(args, "strict", False) else None,
    )


def cmd_run_rwm(args) -> int:
    cfg = _load(args)
    out = Path(cfg.out_dir)
    if args.seeds > 1:
        traces = run_ensemble(cfg.problem, cfg.numerics, cfg.left, args.seeds, engine=args.engine)
        for member, trace in enumerate(traces):
            member_cfg = replace(cfg, numerics=replace(cfg.numerics, member=member))
            write_run_dir(out / f"member_{member:03d}", trace, member_cfg, "run-rwm")
        stats = ensemble_stats(traces)
        write_ensemble_csv(out, stats, cfg)
        print(
            f"ensemble of {args.seeds}: front {stats.front_mean[-1]:.6g} "
            f"+/- {stats.front_std[-1]:.2g} at tau {stats.tau[-1]:.6g}"
        )
    else:
        trace = run(cfg.problem, cfg.numerics, cfg.left, engine=args.engine)
        write_run_dir(out, trace, cfg, "run-rwm")
        print(
            f"walk done: tau {trace.final_tau:.6g} front {trace.final_front:.6g} "
            f"mass {trace.mass[-1]:.6g} violators {trace.violator_count}"
        )
    print(f"wrote {out}")
    return 0


def cmd_run_ref(args) -> int:
    cfg = _load(args)
    out = Path(cfg.out_dir)
    trace = solve_reference(
        cfg.problem, cfg.reference, cfg.left, snapshot_times=cfg.numerics.snapshot_times
    )
    write_run_dir(out, trace, cfg, "run-ref")
    print(
        f"reference done: tau {trace.final_tau:.6g} front {trace.final_front:.6g} "
        f"mass {trace.mass[-1]:.6g}"
    )
    print(f"wrote {out}")
    return 0


def _left_boundary_error(rwm, ref) -> float:
    """Time-averaged relative discrepancy of the left boundary series."""
    good = np.isfinite(rwm.left_u) & np.isfinite(np.interp(rwm.tau, ref.tau, ref.left_u))
    if not good.any():
        return float("nan")
    t = rwm.tau[good]
    mine = rwm.left_u[good]
    theirs = np.interp(t, ref.tau, ref.left_u)
    if t.size < 2:
        denom = float(np.abs(theirs).max())
        return float(np.abs(mine - theirs).max()) / denom if denom > 0 else float("nan")
    num = float(np.trapezoid(np.abs(mine - theirs), t))
    den = float(np.trapezoid(np.abs(theirs), t))
    if den == 0.0:
        return 0.0 if num == 0.0 else float("nan")
    return num / den


def _verdict(label: str, value: float, tol: float) -> bool:
    ok = bool(value <= tol) if np.isfinite(value) else value == 0.0
    print(f"{'PASS' if ok else 'FAIL'} {label} = {value:.6g} (tolerance {tol:g})")
    return ok


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    resolved = cfg.resolved()
    for name, run_dir in (("rwm", args.rwm_dir), ("reference", args.ref_dir)):
        meta = read_meta(run_dir)
        for key in ("problem", "left"):
            if meta["config"].get(key) != resolved[key]:
                print(
                    f"error: {name} run at {run_dir} was produced from a different "
                    f"config ({key} section differs)",
                    file=sys.stderr,
                )
                return 2
    rwm = read_run_dir(args.rwm_dir)
    ref = read_run_dir(args.ref_dir)
    try:
        report = compare_traces(rwm, ref, check_config=True)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out) if args.out else Path(args.rwm_dir)
    write_errors_csv(out / "errors.csv", report, cfg)

    ok = _verdict("front_rel", abs(report.front_rel), args.front_tol)
    ok &= _verdict("mass_rel", abs(report.mass_rel), args.mass_tol)
    for prof in report.profiles:
        value = prof.linf_rel if prof.linf > 0.0 else 0.0
        ok &= _verdict(f"profile_linf_rel[tau={prof.requested_tau:g}]", value, args.profile_tol)
    if cfg.left.kind == "robin":
        ok &= _verdict("left_boundary_avg_rel", _left_boundary_error(rwm, ref), args.left_tol)
    print(f"wrote {out / 'errors.csv'}")
    return 0 if ok else 2


def cmd_bench(args) -> int:
    cfg = _load(args)
    n_list = [int(tok) for tok in args.n_list.split(",") if tok.strip()]
    if args.dtau_list:
        dtau_list = [float(tok) for tok in args.dtau_list.split(",") if tok.strip()]
    else:
        dtau_list = [cfg.numerics.dtau]
    if not n_list or not dtau_list:
        raise ConfigError("bench needs at least one n and one dtau")
    if args.repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {args.repeats}")
    out = Path(args.out) if args.out else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    base = replace(cfg.numerics, snapshot_times=(), strict=False)
    # one short run first so jit compilation never lands inside a timing
    warm = replace(base, n=min(n_list), dtau=dtau_list[0])
    warm_problem = replace(cfg.problem, t_final=min(cfg.problem.t_final, dtau_list[0] * 32))
    run(warm_problem, warm, cfg.left, engine=args.engine)

    rows = []
    fits = []
    for dtau in dtau_list:
        medians = []
        for n in n_list:
            numerics = replace(base, n=n, dtau=dtau)
            times = []
            for _ in range(args.repeats):
                t0 = time.perf_counter()
                run(cfg.problem, numerics, cfg.left, engine=args.engine)
                times.append(time.perf_counter() - t0)
            med = statistics.median(times)
            medians.append(med)
            rows.append((n, dtau, med))
            print(f"n={n} dtau={dtau:g}: median {med:.4g} s over {args.repeats} repeats")
        distinct = sorted(set(n_list))
        if len(distinct) < 2:
            print(f"fit skipped for dtau={dtau:g}: single n point")
            continue
        xs = np.asarray(n_list, dtype=float)
        ys = np.asarray(medians, dtype=float)
        slope, intercept = np.polyfit(xs, ys, 1)
        resid = ys - (slope * xs + intercept)
        total = ys - ys.mean()
        ss_tot = float(total @ total)
        r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(resid @ resid) / ss_tot
        fits.append((dtau, float(slope), float(intercept), r2, len(n_list)))
        print(f"fit dtau={dtau:g}: seconds = {slope:.4g}*n + {intercept:.4g}, r2 = {r2:.4f}")

    fmt = "%." + str(cfg.precision) + "g"
    head = [
        f"# frontwalk {__version__}",
        f"# config_hash: {cfg.config_hash()}",
        f"# seed: {cfg.numerics.seed}",
    ]
    lines = head + ["n,dtau,median_seconds,repeats"]
    lines += [f"{n},{fmt % dtau},{fmt % med},{args.repeats}" for n, dtau, med in rows]
    (out / "bench.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if fits:
        lines = head + ["dtau,slope,intercept,r2,points"]
        lines += [
            f"{fmt % dtau},{fmt % slope},{fmt % inter},{fmt % r2},{pts}"
            for dtau, slope, inter, r2, pts in fits
        ]
        (out / "bench_fit.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out / 'bench.csv'}")
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args)
    problem = cfg.problem
    lattice = build_lattice(cfg.numerics.dtau, problem.length, problem.t_final)
    u_max = estimate_u_max(problem, cfg.left, cfg.numerics.n)
    report = validate_timestep(cfg.numerics.dtau, cfg.numerics.n, problem.thiele, u_max)
    print(f"dz = {lattice.dz:.17g}")
    print(f"cells = {lattice.n_cells}, time slices = {lattice.n_steps}")
    print(report.render())
    return 0 if report.ok else 1


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = argparse.ArgumentParser(
        prog="frontwalk",
        description="Lattice random-walk simulation of diffusant penetration "
        "with a kinetically moving front, plus a deterministic cross-check.",
    )
    parser.add_argument("--version", action="version", version=f"frontwalk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seeds=False):
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--out", default=None, help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--strict", action="store_true", help="abort on time-step bound violation")
        p.add_argument(
            "--engine", choices=("auto", "kernel", "python"), default="auto",
            help="walker update implementation",
        )
        if seeds:
            p.add_argument(
                "--seeds", type=int, default=1,
                help="run this many ensemble members (seed stays, member index varies)",
            )

    p = sub.add_parser("run-rwm", help="simulate the walker model")
    add_common(p, seeds=True)
    p.set_defaults(func=cmd_run_rwm)

    p = sub.add_parser("run-ref", help="solve the deterministic reference formulation")
    add_common(p)
    p.set_defaults(func=cmd_run_ref)

    p = sub.add_parser("compare", help="compare a walker run directory against a reference one")
    p.add_argument("rwm_dir", help="directory written by run-rwm")
    p.add_argument("ref_dir", help="directory written by run-ref")
    p.add_argument("--config", required=True, help="the configuration both runs came from")
    p.add_argument("--out", default=None, help="where to write errors.csv (default: rwm_dir)")
    p.add_argument("--front-tol", type=float, default=0.05)
    p.add_argument("--mass-tol", type=float, default=0.03)
    p.add_argument("--profile-tol", type=float, default=0.10)
    p.add_argument("--left-tol", type=float, default=0.05)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="time walker runs across n and dtau")
    add_common(p)
    p.add_argument("--n-list", default="500,1000,1500,2000", help="comma-separated walker counts")
    p.add_argument("--dtau-list", default=None, help="comma-separated time steps (default: config dtau)")
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="report the time-step bound for a configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OutputError, TimestepError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
