"""Run directory writers and readers.

A run directory holds front.csv, mass.csv, one profile_<time>.csv per
requested output time, diagnostics.csv, meta.txt, and left_boundary.csv for
surface mass-transfer runs. Every file begins with a three-line metadata
header (version, config hash, seed). Dimensional runs append dimensional
columns after the dimensionless ones, so the first columns of a given file
mean the same thing in every run.

Numbers use a configurable count of significant digits, 17 by default,
enough to round-trip float64 exactly. Wall time is the last field of the
diagnostics row so byte determinism can be checked by masking that one
field.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .model import redimensionalize
from .observables import ErrorReport
from .trace import ProfileSnapshot, SolutionTrace


class OutputError(RuntimeError):
    """A run directory that cannot be written or read back."""


def _fmt(precision: int):
    spec = "%." + str(precision) + "g"

    def fmt(value) -> str:
        return spec % float(value)

    return fmt


def _time_label(value: float) -> str:
    return ("%g" % value).replace("+", "")


def _header_lines(config_hash: str, seed) -> list[str]:
    return [
        f"# frontwalk {__version__}",
        f"# config_hash: {config_hash}",
        f"# seed: {'-' if seed is None else seed}",
    ]


def _write_lines(path: Path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def _table(path: Path, head: list[str], columns: list[str], rows) -> None:
    # rows are streamed: dimensional runs have millions of time slices
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for line in head:
            handle.write(line + "\n")
        handle.write(",".join(columns) + "\n")
        for row in rows:
            handle.write(",".join(row) + "\n")


def profile_filename(label: float) -> str:
    return f"profile_{_time_label(label)}.csv"


def write_run_dir(out_dir: str | Path, trace: SolutionTrace, cfg: RunConfig, command: str) -> Path:
    """Write one solver trace as a run directory. Returns the directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fmt = _fmt(cfg.precision)
    head = _header_lines(cfg.config_hash(), trace.seed)
    dim = redimensionalize(trace, cfg.physical) if cfg.physical is not None else None

    if dim is None:
        _table(
            out / "front.csv", head, ["tau", "h"],
            ((fmt(t), fmt(h)) for t, h in zip(trace.tau, trace.front)),
        )
        _table(
            out / "mass.csv", head, ["tau", "mass"],
            ((fmt(t), fmt(m)) for t, m in zip(trace.tau, trace.mass)),
        )
    else:
        _table(
            out / "front.csv", head, ["tau", "h", "t", "s"],
            (
                (fmt(t), fmt(h), fmt(td), fmt(sd))
                for t, h, td, sd in zip(trace.tau, trace.front, dim.tau, dim.front)
            ),
        )
        _table(
            out / "mass.csv", head, ["tau", "mass", "t", "mass_dim"],
            (
                (fmt(t), fmt(m), fmt(td), fmt(md))
                for t, m, td, md in zip(trace.tau, trace.mass, dim.tau, dim.mass)
            ),
        )

    if cfg.left.kind == "robin":
        if dim is None:
            _table(
                out / "left_boundary.csv", head, ["tau", "u"],
                ((fmt(t), fmt(u)) for t, u in zip(trace.tau, trace.left_u)),
            )
        else:
            _table(
                out / "left_boundary.csv", head, ["tau", "u", "t", "m"],
                (
                    (fmt(t), fmt(u), fmt(td), fmt(md))
                    for t, u, td, md in zip(trace.tau, trace.left_u, dim.tau, dim.left_u)
                ),
            )

    label_by_tau = dict(zip(cfg.numerics.snapshot_times, cfg.snapshot_labels))
    for index, snap in enumerate(trace.snapshots):
        label = label_by_tau.get(snap.requested_tau, snap.requested_tau * cfg.time_scale)
        phead = head + [
            f"# requested_tau: {fmt(snap.requested_tau)}",
            f"# realized_tau: {fmt(snap.realized_tau)}",
        ]
        if dim is None:
            _table(
                out / profile_filename(label), phead, ["z", "u"],
                ((fmt(z), fmt(u)) for z, u in zip(snap.z, snap.u)),
            )
        else:
            dsnap = dim.snapshots[index]
            _table(
                out / profile_filename(label), phead, ["z", "u", "x", "m"],
                (
                    (fmt(z), fmt(u), fmt(x), fmt(m))
                    for z, u, x, m in zip(snap.z, snap.u, dsnap.z, dsnap.u)
                ),
            )

    pb = trace.pb_stats or {}
    diag_cols = [
        "kind", "engine_steps", "pb_min", "pb_max", "pb_evaluations",
        "violator_count", "adsorbed_count", "suppressed_pushes",
        "arrival_count", "realized_umax", "realized_timestep_ok",
        "wall_time_seconds",
    ]
    report = trace.timestep_report or {}
    realized_ok = report.get("realized_ok")
    diag_row = [
        trace.kind,
        str(len(trace.tau)),
        fmt(pb.get("min", float("nan"))),
        fmt(pb.get("max", float("nan"))),
        str(pb.get("evaluations", 0)),
        str(trace.violator_count),
        str(trace.adsorbed_count),
        str(trace.suppressed_pushes),
        str(trace.arrival_count),
        fmt(trace.realized_umax),
        "na" if realized_ok is None else str(bool(realized_ok)).lower(),
        fmt(trace.wall_time_seconds),
    ]
    _table(out / "diagnostics.csv", head, diag_cols, [diag_row])

    meta = list(head)
    meta.append(f"command: {command}")
    meta.append(f"kind: {trace.kind}")
    meta.append(f"units: {'dimensional' if cfg.physical is not None else 'dimensionless'}")
    meta.append(f"time_scale: {fmt(cfg.time_scale)}")
    meta.append("config:")
    meta.append(json.dumps(cfg.resolved(), indent=2, sort_keys=True))
    _write_lines(out / "meta.txt", meta)
    return out


def write_ensemble_csv(out_dir: str | Path, stats, cfg: RunConfig) -> Path:
    """Cross-member mean and standard deviation of front and mass."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fmt = _fmt(cfg.precision)
    head = _header_lines(cfg.config_hash(), cfg.numerics.seed)
    head.append(f"# members: {stats.members}")
    _table(
        out / "ensemble.csv", head,
        ["tau", "front_mean", "front_std", "mass_mean", "mass_std"],
        (
            (fmt(t), fmt(fm), fmt(fs), fmt(mm), fmt(ms))
            for t, fm, fs, mm, ms in zip(
                stats.tau, stats.front_mean, stats.front_std, stats.mass_mean, stats.mass_std
            )
        ),
    )
    return out / "ensemble.csv"


def write_errors_csv(path: str | Path, report: ErrorReport, cfg: RunConfig) -> Path:
    """Flatten an ErrorReport into metric rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = _fmt(cfg.precision)
    head = _header_lines(cfg.config_hash(), cfg.numerics.seed)
    rows = [
        ("at_tau", "", fmt(report.at_tau)),
        ("front_value", "", fmt(report.front_value)),
        ("front_ref", "", fmt(report.front_ref)),
        ("front_rel", "", fmt(report.front_rel)),
        ("mass_value", "", fmt(report.mass_value)),
        ("mass_ref", "", fmt(report.mass_ref)),
        ("mass_rel", "", fmt(report.mass_rel)),
    ]
    for prof in report.profiles:
        tag = fmt(prof.requested_tau)
        rows.extend(
            (
                ("profile_l2", tag, fmt(prof.l2)),
                ("profile_linf", tag, fmt(prof.linf)),
                ("profile_l2_rel", tag, fmt(prof.l2_rel)),
                ("profile_linf_rel", tag, fmt(prof.linf_rel)),
                ("profile_ref_max", tag, fmt(prof.ref_max)),
            )
        )
    _table(path, head, ["metric", "requested_tau", "value"], rows)
    return path


def _read_csv(path: Path) -> tuple[dict[str, str], list[str], np.ndarray]:
    """Read a numeric run file: ('# key: value' comments, column names, data).

    The data block is parsed by numpy so a multi-million-row front series
    loads as one float64 array instead of python row objects.
    """
    if not path.is_file():
        raise OutputError(f"missing run file: {path}")
    comments: dict[str, str] = {}
    columns: list[str] = []
    with open(path, encoding="utf-8") as handle:
        for raw in handle:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, sep, value = body.partition(":")
                if sep:
                    comments[key.strip()] = value.strip()
                continue
            columns = [c.strip() for c in line.split(",")]
            break
        try:
            data = np.loadtxt(handle, delimiter=",", dtype=np.float64, ndmin=2)
        except ValueError as exc:
            raise OutputError(f"unreadable table in {path}: {exc}") from None
    if data.size == 0:
        data = np.empty((0, len(columns)))
    return comments, columns, data


def read_meta(run_dir: str | Path) -> dict:
    """Parse meta.txt: header comments, key lines, and the config document."""
    path = Path(run_dir) / "meta.txt"
    if not path.is_file():
        raise OutputError(f"missing run file: {path}")
    meta: dict = {}
    lines = path.read_text(encoding="utf-8").splitlines()
    idx = 0
    while idx < len(lines):
        line = lines[idx]
        idx += 1
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition(":")
            if sep:
                meta[key.strip()] = value.strip()
            continue
        key, sep, value = line.partition(":")
        if not sep:
            continue
        if key.strip() == "config":
            try:
                meta["config"] = json.loads("\n".join(lines[idx:]))
            except json.JSONDecodeError as exc:
                raise OutputError(f"unreadable config block in {path}: {exc}") from None
            break
        meta[key.strip()] = value.strip()
    if "config" not in meta:
        raise OutputError(f"no config block in {path}")
    return meta


def read_run_dir(run_dir: str | Path) -> SolutionTrace:
    """Rebuild a trace from a run directory.

    Only the fields comparisons need are recovered: time series, profiles,
    and the config echo. Walker diagnostics stay at their defaults.
    """
    run_dir = Path(run_dir)
    meta = read_meta(run_dir)
    config = meta["config"]
    kind = meta.get("kind", "rwm")

    _, _, front = _read_csv(run_dir / "front.csv")
    _, _, mass = _read_csv(run_dir / "mass.csv")
    if front.shape[0] != mass.shape[0]:
        raise OutputError(f"front.csv and mass.csv disagree on row count in {run_dir}")

    left_path = run_dir / "left_boundary.csv"
    if left_path.is_file():
        _, _, left = _read_csv(left_path)
        left_u = left[:, 1]
    else:
        left_u = np.full(front.shape[0], float("nan"))

    snapshots = []
    for path in sorted(run_dir.glob("profile_*.csv")):
        comments, _, data = _read_csv(path)
        try:
            requested = float(comments["requested_tau"])
            realized = float(comments["realized_tau"])
        except KeyError:
            raise OutputError(f"profile file without time annotations: {path}") from None
        snapshots.append(
            ProfileSnapshot(
                requested_tau=requested,
                realized_tau=realized,
                z=data[:, 0].copy(),
                u=data[:, 1].copy(),
            )
        )
    snapshots.sort(key=lambda s: s.requested_tau)

    numerics = config.get("numerics", {})
    echo = {
        "problem": config.get("problem", {}),
        "left": config.get("left", {}),
        "numerics": numerics,
    }
    seed_text = meta.get("seed", "-")
    return SolutionTrace(
        kind=kind,
        tau=front[:, 0].copy(),
        front=front[:, 1].copy(),
        mass=mass[:, 1].copy(),
        left_u=left_u,
        snapshots=snapshots,
        n=int(numerics.get("n", 1)),
        seed=None if seed_text == "-" else int(seed_text),
        config_echo=echo,
    )
