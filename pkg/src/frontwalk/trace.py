"""Result containers shared by the walker solver and the reference solver."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ProfileSnapshot:
    """Concentration profile stored at one requested output time.

    ``realized_tau`` is the simulated time actually hit (nearest time slice to
    the request); ``u`` is normalized concentration on the node positions
    ``z``.
    """

    requested_tau: float
    realized_tau: float
    z: np.ndarray
    u: np.ndarray


@dataclass
class SolutionTrace:
    """Full record of one solver run.

    Both solvers emit this shape; the reference solver uses ``n = 1`` and
    leaves the walker-specific counters at zero. All arrays are indexed by
    time slice. ``units`` is ``"dimensionless"`` unless the trace came out of
    ``redimensionalize``.
    """

    kind: str
    tau: np.ndarray
    front: np.ndarray
    mass: np.ndarray
    left_u: np.ndarray
    snapshots: list[ProfileSnapshot] = field(default_factory=list)
    discretization: dict = field(default_factory=dict)
    n: int = 1
    seed: int | None = None
    member: int | None = None
    pb_stats: dict | None = None
    adsorbed_count: int = 0
    violator_count: int = 0
    suppressed_pushes: int = 0
    arrival_count: int = 0
    realized_umax: float = float("nan")
    timestep_report: dict | None = None
    wall_time_seconds: float = 0.0
    config_echo: dict = field(default_factory=dict)
    units: str = "dimensionless"

    @property
    def final_tau(self) -> float:
        return float(self.tau[-1])

    @property
    def final_front(self) -> float:
        return float(self.front[-1])


def traces_equal(a: SolutionTrace, b: SolutionTrace) -> bool:
    """Bitwise equality of two traces, ignoring wall time.

    Used to assert that a (seed, config) pair is a pure function of its
    inputs. Wall time is measurement, not simulation state.
    """
    if (a.kind, a.n, a.seed, a.member, a.units) != (b.kind, b.n, b.seed, b.member, b.units):
        return False
    for name in ("tau", "front", "mass", "left_u"):
        if not np.array_equal(getattr(a, name), getattr(b, name)):
            return False
    if len(a.snapshots) != len(b.snapshots):
        return False
    for sa, sb in zip(a.snapshots, b.snapshots):
        if sa.requested_tau != sb.requested_tau or sa.realized_tau != sb.realized_tau:
            return False
        if not (np.array_equal(sa.z, sb.z) and np.array_equal(sa.u, sb.u)):
            return False
    if (a.adsorbed_count, a.violator_count, a.suppressed_pushes, a.arrival_count) != (
        b.adsorbed_count,
        b.violator_count,
        b.suppressed_pushes,
        b.arrival_count,
    ):
        return False
    if a.pb_stats is not None or b.pb_stats is not None:
        if (a.pb_stats is None) != (b.pb_stats is None):
            return False
        if a.pb_stats.keys() != b.pb_stats.keys():
            return False
        for key in a.pb_stats:
            va, vb = a.pb_stats[key], b.pb_stats[key]
            if isinstance(va, np.ndarray):
                if not np.array_equal(va, vb):
                    return False
            elif va != vb and not (va != va and vb != vb):  # allow NaN == NaN
                return False
    if not (
        a.realized_umax == b.realized_umax
        or (a.realized_umax != a.realized_umax and b.realized_umax != b.realized_umax)
    ):
        return False
    return a.config_echo == b.config_echo and a.discretization == b.discretization
