"""Lattice random walk with an explicit-Euler moving front.

Discretization: walkers live on the uniform lattice ``z_i = i*dz`` with
``dz = sqrt(2*dtau)``, so a symmetric +-1 step per time slice realizes the
unit-diffusivity heat kernel. The stored count field is n times the
concentration: ``counts[i] ~= n * u(tau_j, z_i)``.

Front rules, applied per walker arriving at the front neighbor node:

* reaction probability  ``P_b = sqrt(2*dtau) * (A/n) * (counts_k - n*sigma(h))``
* accepted push         ``h <- h + dtau * (A/n) * (counts_k - n*sigma(h))``

where ``A`` is the Thiele-type kinetic group of the problem. The brake term
``sigma`` is scaled to count units so that the front law the walk realizes,
``h' = A * (u - sigma)``, does not depend on n. An accepted push
leaves the walker at the front node; a rejected one reflects a node left; a
reaction probability outside (0,1) leaves the walker in place and counts as a
violator. Pushes accumulate within a slice and the front index
``k = floor(h/dz)`` is re-derived after each one; once the front crosses the
neighbor node, the remaining walkers of the old front node take symmetric
moves again.

The left boundary follows the absorb-then-reinject procedure: walkers
stepping onto or past node 0 are removed, and the node-0 count of each new
slice is assigned from the boundary condition (fixed value, or the discrete
surface mass-transfer balance for the Robin case).
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import DimensionlessProblem, ProfileSpec
from .rng import RandomStream, member_stream
from .trace import ProfileSnapshot, SolutionTrace

logger = logging.getLogger(__name__)

PB_HIST_LABELS = (
    "pb<0",
    "0.0-0.1",
    "0.1-0.2",
    "0.2-0.3",
    "0.3-0.4",
    "0.4-0.5",
    "0.5-0.6",
    "0.6-0.7",
    "0.7-0.8",
    "0.8-0.9",
    "0.9-1.0",
    "pb>=1",
)


class TimestepError(RuntimeError):
    """Raised in strict mode when the time-step bound is violated."""


@dataclass(frozen=True)
class Lattice:
    """Uniform walk lattice in space and time.

    ``dz = sqrt(2*dtau)`` ties the mesh width to the time step; ``n_cells`` is
    the number of spatial subintervals (nodes run 0..n_cells) and ``n_steps``
    the number of time slices after the initial one. ``truncation`` is the
    uncovered remainder ``length - n_cells*dz``.
    """

    dtau: float
    dz: float
    n_cells: int
    n_steps: int
    truncation: float

    def nodes(self, upto: int | None = None) -> np.ndarray:
        last = self.n_cells if upto is None else upto
        return np.arange(last + 1) * self.dz


def build_lattice(dtau: float, length: float, t_final: float) -> Lattice:
    """Build the lattice for a domain [0, length] and horizon t_final.

    Rejects dtau outside (0, 1), a dz that leaves fewer than 2 cells, and a
    horizon shorter than one step. t_final == 0 is the degenerate exception
    (no steps, initial state only).
    """
    if not 0.0 < dtau < 1.0:
        raise ValueError(f"dtau must lie in (0, 1), got {dtau!r}")
    if length <= 0.0:
        raise ValueError(f"length must be positive, got {length!r}")
    if t_final < 0.0:
        raise ValueError(f"t_final must be nonnegative, got {t_final!r}")
    dz = math.sqrt(2.0 * dtau)
    n_cells = int(length / dz)
    if n_cells < 2:
        raise ValueError(
            f"dtau={dtau!r} gives dz={dz!r}; fewer than 2 cells fit in length={length!r}"
        )
    n_steps = int(t_final / dtau)
    if t_final > 0.0 and n_steps < 1:
        raise ValueError(f"t_final={t_final!r} is shorter than one step dtau={dtau!r}")
    truncation = length - n_cells * dz
    if truncation > 0.0:
        logger.debug("lattice truncates domain by %g (length %g, dz %g)", truncation, length, dz)
    return Lattice(dtau=dtau, dz=dz, n_cells=n_cells, n_steps=n_steps, truncation=truncation)


def front_index(h: float, dz: float) -> int:
    """Node index of the front cell, floor(h/dz). Ties resolve to the floor."""
    if h < 0.0:
        raise ValueError(f"front position must be nonnegative, got {h!r}")
    if dz <= 0.0:
        raise ValueError(f"dz must be positive, got {dz!r}")
    return int(h / dz)


@dataclass
class WalkerField:
    """Walker counts per lattice node; counts are n times concentration."""

    counts: np.ndarray
    n: int

    def total(self) -> int:
        return int(self.counts.sum())

    def concentration(self) -> np.ndarray:
        return self.counts / self.n


@dataclass
class FrontState:
    """Exact front position h, derived node index k, and push bookkeeping."""

    h: float
    k: int
    adsorbed_count: int = 0
    violator_count: int = 0


@dataclass(frozen=True)
class LeftBoundarySpec:
    """Left boundary treatment: fixed value or surface mass-transfer balance.

    ``kind="dirichlet"`` holds the node-0 concentration at ``u_value``;
    ``kind="robin"`` assigns node 0 each slice from the discrete balance using
    the problem's biot, henry and forcing data.
    """

    kind: str
    u_value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("dirichlet", "robin"):
            raise ValueError(f"left boundary kind must be 'dirichlet' or 'robin', got {self.kind!r}")
        if self.kind == "dirichlet" and self.u_value < 0.0:
            raise ValueError(f"dirichlet boundary value must be >= 0, got {self.u_value!r}")

    def to_dict(self) -> dict:
        if self.kind == "dirichlet":
            return {"kind": "dirichlet", "u_value": self.u_value}
        return {"kind": "robin"}


def init_walkers(u0: ProfileSpec, n: int, lattice: Lattice, h0: float) -> WalkerField:
    """Populate nodes 0..floor(h0/dz) with round(n*u0(z_i)) walkers.

    Rounding is to nearest with ties to even. Rejects nonpositive n, profiles
    undefined at some node (tabulated profile gaps), and negative profile
    values.
    """
    if n < 1:
        raise ValueError(f"walker multiplicity n must be >= 1, got {n!r}")
    k0 = front_index(h0, lattice.dz)
    if k0 > lattice.n_cells:
        raise ValueError(f"h0={h0!r} lies beyond the lattice (k0={k0}, n_cells={lattice.n_cells})")
    counts = np.zeros(lattice.n_cells + 1, dtype=np.int64)
    for i in range(k0 + 1):
        value = u0.value_at(i * lattice.dz)
        if value < 0.0:
            raise ValueError(f"initial profile is negative at node {i}: {value!r}")
        counts[i] = round(n * value)
    return WalkerField(counts=counts, n=n)


def apply_left_dirichlet(field: WalkerField, u_value: float) -> int:
    """Assign the fixed boundary count round(n*u_value) to node 0.

    Walkers that stepped onto or past node 0 during the preceding move phase
    were absorbed there; this assignment is the reinjection half of the
    procedure. Returns the assigned count.
    """
    if u_value < 0.0:
        raise ValueError(f"boundary value must be >= 0, got {u_value!r}")
    injected = round(field.n * u_value)
    field.counts[0] = injected
    return injected


def apply_left_robin(field: WalkerField, dz: float, biot: float, henry: float, forcing_value: float) -> int:
    """Assign node 0 from the discrete surface mass-transfer balance.

    counts[0] = round((n*dz*biot*forcing + counts[1]) / (1 + dz*biot*henry)).
    As with the fixed-value case, arrivals at node 0 were absorbed during the
    move phase; the balance fully determines the new boundary count. Returns
    the assigned count.
    """
    if biot <= 0.0 or henry <= 0.0:
        raise ValueError(f"biot and henry must be positive, got {biot!r}, {henry!r}")
    numerator = field.n * dz * biot * forcing_value + float(field.counts[1])
    injected = round(numerator / (1.0 + dz * biot * henry))
    field.counts[0] = injected
    return injected


def reaction_probability(counts_at_k: float, n: int, dtau: float, thiele: float, sigma_at_h: float) -> float:
    """Per-arrival front reaction probability.

    P_b = sqrt(2*dtau) * (thiele/n) * (counts_at_k - sigma_at_h), evaluated on
    stored counts. The caller checks 0 < P_b < 1; out-of-range values mark the
    walker as a violator (it neither pushes nor reflects).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    if dtau <= 0.0:
        raise ValueError(f"dtau must be positive, got {dtau!r}")
    return math.sqrt(2.0 * dtau) * (thiele / n) * (counts_at_k - sigma_at_h)


def per_walker_increment(counts_at_k: float, n: int, dtau: float, thiele: float, sigma_at_h: float) -> float:
    """Front advance contributed by one accepted push.

    delta_h = dtau * (thiele/n) * (counts_at_k - sigma_at_h); equals
    P_b * sqrt(dtau/2), so every applied increment stays below dz/2.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    if dtau <= 0.0:
        raise ValueError(f"dtau must be positive, got {dtau!r}")
    return dtau * (thiele / n) * (counts_at_k - sigma_at_h)


@dataclass(frozen=True)
class TimestepReport:
    """Outcome of the a-priori time-step bound check.

    The walk stays well posed when sqrt(dtau) <= n / (sqrt(2)*thiele*u_max),
    with u_max an upper estimate of the stored-count excess at the front; the
    bound caps every reaction probability below 1 and every per-walker push
    below half a cell.
    """

    dtau: float
    n: int
    thiele: float
    u_max: float
    sqrt_dtau: float
    bound: float
    dtau_ok: bool
    bound_ok: bool
    half_cell: float

    @property
    def ok(self) -> bool:
        return self.dtau_ok and self.bound_ok

    def to_dict(self) -> dict:
        return {
            "dtau": self.dtau,
            "n": self.n,
            "thiele": self.thiele,
            "u_max": self.u_max,
            "sqrt_dtau": self.sqrt_dtau,
            "bound": self.bound,
            "dtau_ok": self.dtau_ok,
            "bound_ok": self.bound_ok,
            "half_cell": self.half_cell,
            "ok": self.ok,
        }

    def render(self) -> str:
        lines = [
            f"dtau in (0,1): {'ok' if self.dtau_ok else 'VIOLATED'} (dtau={self.dtau:.17g})",
            (
                f"sqrt(dtau) <= n/(sqrt(2)*thiele*u_max): {'ok' if self.bound_ok else 'VIOLATED'} "
                f"({self.sqrt_dtau:.17g} vs {self.bound:.17g}, u_max={self.u_max:.17g})"
            ),
            f"per-walker increment bound dz/2 = {self.half_cell:.17g}",
        ]
        return "\n".join(lines)


def validate_timestep(dtau: float, n: int, thiele: float, u_max: float) -> TimestepReport:
    """Check the time-step bound against an estimate of the front excess.

    u_max is in stored-count units (n times concentration). A nonpositive
    u_max makes the bound vacuous. The check is advisory: callers decide
    whether a violation warns or aborts.
    """
    sqrt_dtau = math.sqrt(dtau) if dtau > 0.0 else float("nan")
    if u_max > 0.0:
        bound = n / (math.sqrt(2.0) * thiele * u_max)
    else:
        bound = float("inf")
    dtau_ok = 0.0 < dtau < 1.0
    bound_ok = bool(sqrt_dtau <= bound) if dtau_ok else False
    half_cell = math.sqrt(2.0 * dtau) / 2.0 if dtau > 0.0 else float("nan")
    return TimestepReport(
        dtau=dtau,
        n=n,
        thiele=thiele,
        u_max=u_max,
        sqrt_dtau=sqrt_dtau,
        bound=bound,
        dtau_ok=dtau_ok,
        bound_ok=bound_ok,
        half_cell=half_cell,
    )


def estimate_u_max(problem: DimensionlessProblem, left: LeftBoundarySpec, n: int) -> float:
    """A-priori stored-count scale: n * max(boundary level, max initial value).

    The boundary level is the fixed value for a Dirichlet boundary and the
    peak forcing for a Robin one (the partition-free bound). The realized
    maximum is re-checked after every run.
    """
    if left.kind == "dirichlet":
        level = left.u_value
    else:
        f = problem.forcing
        level = f.constant if f.kind == "constant" else max(f.values)
    u0 = problem.u0
    u0_max = u0.constant if u0.kind == "constant" else max(u0.values)
    return n * max(level, u0_max)


@dataclass
class StepStats:
    """Counters accumulated over one or more advance calls."""

    absorbed_left: int = 0
    adsorbed: int = 0
    violators: int = 0
    arrivals: int = 0
    suppressed: int = 0
    pb_min: float = math.inf
    pb_max: float = -math.inf
    umax: float = -math.inf

    def fold(self, other: "StepStats") -> None:
        self.absorbed_left += other.absorbed_left
        self.adsorbed += other.adsorbed
        self.violators += other.violators
        self.arrivals += other.arrivals
        self.suppressed += other.suppressed
        self.pb_min = min(self.pb_min, other.pb_min)
        self.pb_max = max(self.pb_max, other.pb_max)
        self.umax = max(self.umax, other.umax)


@dataclass(frozen=True)
class _Kinetics:
    """Scalar bundle handed to the advance routines."""

    dz: float
    dtau: float
    a0_over_n: float
    sig_kind: int
    sig_coeff: float
    sig_xs: np.ndarray
    sig_ys: np.ndarray
    n_cells: int
    length: float


def _kinetics_for(problem: DimensionlessProblem, lattice: Lattice, n: int) -> _Kinetics:
    # Stored counts are n times the concentration, so the brake term enters
    # the front rule in count units as n*sigma(h). This keeps the front law
    # independent of n; comparing raw counts against an unscaled sigma would
    # weaken the brake by a factor n.
    sig = problem.sigma_tilde
    if sig.kind == "linear":
        kind, coeff = 0, sig.coefficient * n
        xs = np.empty(0, dtype=np.float64)
        ys = np.empty(0, dtype=np.float64)
    else:
        kind, coeff = 1, 0.0
        xs = np.asarray(sig.positions, dtype=np.float64)
        ys = np.asarray(sig.values, dtype=np.float64) * n
    return _Kinetics(
        dz=lattice.dz,
        dtau=lattice.dtau,
        a0_over_n=problem.thiele / n,
        sig_kind=kind,
        sig_coeff=coeff,
        sig_xs=xs,
        sig_ys=ys,
        n_cells=lattice.n_cells,
        length=problem.length,
    )


def _sigma_value(kind: int, coeff: float, xs: np.ndarray, ys: np.ndarray, h: float) -> float:
    # Mirrors _kernels._sigma_eval operation for operation.
    if kind == 0:
        return coeff * h
    if h <= xs[0]:
        return float(ys[0])
    if h >= xs[-1]:
        return float(ys[-1])
    lo = 0
    hi = len(xs) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xs[mid] <= h:
            lo = mid
        else:
            hi = mid
    slope = (ys[lo + 1] - ys[lo]) / (xs[lo + 1] - xs[lo])
    return float(ys[lo] + slope * (h - xs[lo]))


def _advance_python(
    counts: np.ndarray,
    out: np.ndarray,
    stream,
    h: float,
    k: int,
    i_limit: int,
    kin: _Kinetics,
    pb_hist: np.ndarray,
) -> tuple[float, int, StepStats]:
    """Reference implementation of one slice advance.

    Accepts any stream object with draw_step()/draw_uniform(), which makes the
    branch behavior testable with scripted draws. Must stay in lockstep with
    _kernels.advance_slice.
    """
    sqrt2dtau = math.sqrt(2.0 * kin.dtau)
    stats = StepStats()
    for i in range(i_limit + 1):
        c = int(counts[i])
        for _w in range(c):
            p = stream.draw_step()
            dest = i + p
            if dest > 0 and dest <= k and i <= kin.n_cells - 1:
                out[dest] += 1
            elif dest == k + 1:
                sig = _sigma_value(kin.sig_kind, kin.sig_coeff, kin.sig_xs, kin.sig_ys, h)
                excess = counts[k] - sig
                pb = sqrt2dtau * kin.a0_over_n * excess
                stats.arrivals += 1
                stats.pb_min = min(stats.pb_min, pb)
                stats.pb_max = max(stats.pb_max, pb)
                stats.umax = max(stats.umax, excess)
                if pb < 0.0:
                    pb_hist[0] += 1
                elif pb >= 1.0:
                    pb_hist[11] += 1
                else:
                    pb_hist[min(int(pb * 10.0) + 1, 10)] += 1
                if 0.0 < pb < 1.0:
                    r = stream.draw_uniform()
                    if r < pb:
                        dh = kin.dtau * kin.a0_over_n * excess
                        if h + dh < kin.length:
                            h = h + dh
                            out[i] += 1
                            stats.adsorbed += 1
                            nk = int(h / kin.dz)
                            if nk != k:
                                k = nk
                        else:
                            out[i] += 1
                            stats.suppressed += 1
                    else:
                        if k - 1 >= 1:
                            out[k - 1] += 1
                        else:
                            stats.absorbed_left += 1
                else:
                    out[i] += 1
                    stats.violators += 1
            else:
                assert dest <= 0, f"walker at node {i} reached unreachable destination {dest}"
                stats.absorbed_left += 1
    return h, k, stats


def _advance_kernel(
    counts: np.ndarray,
    out: np.ndarray,
    stream: RandomStream,
    h: float,
    k: int,
    i_limit: int,
    kin: _Kinetics,
    pb_hist: np.ndarray,
) -> tuple[float, int, StepStats]:
    (
        state,
        h,
        k,
        absorbed_left,
        adsorbed,
        violators,
        arrivals,
        suppressed,
        pb_min,
        pb_max,
        umax,
    ) = _kernels.advance_slice(
        counts,
        out,
        np.uint64(stream.state),
        h,
        int(k),
        int(i_limit),
        kin.dz,
        kin.dtau,
        kin.a0_over_n,
        kin.sig_kind,
        kin.sig_coeff,
        kin.sig_xs,
        kin.sig_ys,
        kin.n_cells,
        kin.length,
        pb_hist,
    )
    stream.state = int(state)
    stats = StepStats(
        absorbed_left=int(absorbed_left),
        adsorbed=int(adsorbed),
        violators=int(violators),
        arrivals=int(arrivals),
        suppressed=int(suppressed),
        pb_min=float(pb_min),
        pb_max=float(pb_max),
        umax=float(umax),
    )
    return float(h), int(k), stats


def _pick_engine(engine: str, stream) -> str:
    if engine == "auto":
        if _kernels.HAVE_NUMBA and isinstance(stream, RandomStream):
            return "kernel"
        return "python"
    if engine == "kernel":
        if not _kernels.HAVE_NUMBA:
            raise RuntimeError("kernel engine requested but numba is not available")
        if not isinstance(stream, RandomStream):
            raise RuntimeError("kernel engine requires a RandomStream")
        return "kernel"
    if engine == "python":
        return "python"
    raise ValueError(f"unknown engine {engine!r}")


def _populate_left(
    field: WalkerField,
    left: LeftBoundarySpec,
    problem: DimensionlessProblem,
    dz: float,
    tau: float,
) -> int:
    if left.kind == "dirichlet":
        return apply_left_dirichlet(field, left.u_value)
    return apply_left_robin(field, dz, problem.biot, problem.henry, problem.forcing.value_at(tau))


def step(
    field: WalkerField,
    front: FrontState,
    left: LeftBoundarySpec,
    stream,
    lattice: Lattice,
    problem: DimensionlessProblem,
    time_index: int,
    engine: str = "auto",
) -> tuple[WalkerField, FrontState]:
    """Advance one time slice, from index ``time_index`` to ``time_index + 1``.

    Moves the walkers of the current slice (absorbing arrivals at node 0 and
    applying the front rules), then assigns the node-0 count of the new slice
    from the boundary condition at the new time. Returns the new field and
    front; the inputs are not modified.
    """
    if front.k >= lattice.n_cells - 1:
        raise ValueError(f"front index {front.k} has reached the lattice edge; nothing to step")
    out = np.zeros_like(field.counts)
    kin = _kinetics_for(problem, lattice, field.n)
    pb_hist = np.zeros(12, dtype=np.int64)
    advance = _advance_kernel if _pick_engine(engine, stream) == "kernel" else _advance_python
    i_limit = min(front.k + 1, lattice.n_cells)
    h, k, stats = advance(field.counts, out, stream, front.h, front.k, i_limit, kin, pb_hist)
    new_field = WalkerField(counts=out, n=field.n)
    _populate_left(new_field, left, problem, lattice.dz, (time_index + 1) * lattice.dtau)
    new_front = FrontState(
        h=h,
        k=k,
        adsorbed_count=front.adsorbed_count + stats.adsorbed,
        violator_count=front.violator_count + stats.violators,
    )
    return new_field, new_front


@dataclass(frozen=True)
class RwmNumerics:
    """Numerical controls for a walker run."""

    dtau: float
    n: int
    seed: int
    member: int = 0
    snapshot_times: tuple[float, ...] = ()
    strict: bool = False

    def to_dict(self) -> dict:
        return {
            "dtau": self.dtau,
            "n": self.n,
            "seed": self.seed,
            "member": self.member,
            "snapshot_times": list(self.snapshot_times),
            "strict": self.strict,
        }


def _mass_of_counts(counts: np.ndarray, k: int, h: float, dz: float, n: int) -> float:
    """Trapezoid over nodes 0..k plus the partial cell [z_k, h] at u(z_k)."""
    u = counts[: k + 1] / n
    if k >= 1:
        trap = dz * (float(u.sum()) - 0.5 * (float(u[0]) + float(u[k])))
    else:
        trap = 0.0
    return trap + (h - k * dz) * float(u[k])


def run(
    problem: DimensionlessProblem,
    numerics: RwmNumerics,
    left: LeftBoundarySpec,
    engine: str = "auto",
) -> SolutionTrace:
    """Simulate the walker system and return its trace.

    Iterates slice updates until the last time slice or until the front index
    reaches the outer lattice edge (a normal stop: the walk has consumed the
    domain). The trace records the front, total mass and left-boundary value
    at every slice, profiles at the requested snapshot times, reaction
    probability statistics, and the realized front-excess maximum for the
    post-hoc time-step check.
    """
    t_start = time.perf_counter()
    lattice = build_lattice(numerics.dtau, problem.length, problem.t_final)
    u_max_estimate = estimate_u_max(problem, left, numerics.n)
    report = validate_timestep(numerics.dtau, numerics.n, problem.thiele, u_max_estimate)
    if not report.ok:
        if numerics.strict:
            raise TimestepError("time-step bound violated:\n" + report.render())
        logger.warning("time-step bound advisory:\n%s", report.render())

    for t_snap in numerics.snapshot_times:
        if not 0.0 <= t_snap <= problem.t_final:
            raise ValueError(f"snapshot time {t_snap!r} outside [0, {problem.t_final!r}]")

    field = init_walkers(problem.u0, numerics.n, lattice, problem.h0)
    stream = member_stream(numerics.seed, numerics.member)
    chosen = _pick_engine(engine, stream)
    advance = _advance_kernel if chosen == "kernel" else _advance_python
    kin = _kinetics_for(problem, lattice, numerics.n)

    h = problem.h0
    k = front_index(h, lattice.dz)
    counts = field.counts
    scratch = np.zeros_like(counts)

    # map requested snapshot times to slice indices (nearest slice)
    snapshot_plan: dict[int, list[float]] = {}
    for t_snap in numerics.snapshot_times:
        j_snap = int(round(t_snap / lattice.dtau))
        snapshot_plan.setdefault(j_snap, []).append(t_snap)

    # one row per recorded slice, preallocated: long runs make per-slice
    # python lists a memory hazard
    n_rows = max(lattice.n_steps, 1)
    taus = np.empty(n_rows, dtype=np.float64)
    fronts = np.empty(n_rows, dtype=np.float64)
    masses = np.empty(n_rows, dtype=np.float64)
    lefts = np.empty(n_rows, dtype=np.float64)
    snapshots: list[ProfileSnapshot] = []
    totals = StepStats()
    pb_hist = np.zeros(12, dtype=np.int64)

    def record(j: int) -> None:
        taus[j] = j * lattice.dtau
        fronts[j] = h
        masses[j] = _mass_of_counts(counts, k, h, lattice.dz, numerics.n)
        lefts[j] = counts[0] / numerics.n
        for requested in snapshot_plan.get(j, ()):
            snapshots.append(
                ProfileSnapshot(
                    requested_tau=requested,
                    realized_tau=j * lattice.dtau,
                    z=lattice.nodes(k).copy(),
                    u=counts[: k + 1] / numerics.n,
                )
            )

    j = 0
    record(j)
    while j < lattice.n_steps - 1 and k < lattice.n_cells - 1:
        scratch[:] = 0
        total_in = int(counts.sum())
        i_limit = min(k + 1, lattice.n_cells)
        h, k, stats = advance(counts, scratch, stream, h, k, i_limit, kin, pb_hist)
        counts, scratch = scratch, counts
        totals.fold(stats)
        if int(counts.sum()) + stats.absorbed_left != total_in:
            raise RuntimeError(f"walker conservation broken at slice {j}")
        j += 1
        _populate_left(field_view(counts, numerics.n), left, problem, lattice.dz, j * lattice.dtau)
        record(j)

    # snapshots requested beyond the last realized slice (run stopped early,
    # or the request mapped to the horizon itself) report the final state
    for j_snap in sorted(snapshot_plan):
        if j_snap > j:
            for requested in snapshot_plan[j_snap]:
                snapshots.append(
                    ProfileSnapshot(
                        requested_tau=requested,
                        realized_tau=j * lattice.dtau,
                        z=lattice.nodes(k).copy(),
                        u=counts[: k + 1] / numerics.n,
                    )
                )

    realized_umax = totals.umax if totals.arrivals > 0 else float("nan")
    realized = validate_timestep(numerics.dtau, numerics.n, problem.thiele, max(realized_umax, 0.0) if totals.arrivals > 0 else 0.0)
    wall = time.perf_counter() - t_start

    return SolutionTrace(
        kind="rwm",
        tau=taus[: j + 1].copy(),
        front=fronts[: j + 1].copy(),
        mass=masses[: j + 1].copy(),
        left_u=lefts[: j + 1].copy(),
        snapshots=snapshots,
        discretization={
            "dtau": lattice.dtau,
            "dz": lattice.dz,
            "n_cells": lattice.n_cells,
            "n_steps": lattice.n_steps,
            "truncation": lattice.truncation,
        },
        n=numerics.n,
        seed=numerics.seed,
        member=numerics.member,
        pb_stats={
            "min": totals.pb_min if totals.arrivals > 0 else float("nan"),
            "max": totals.pb_max if totals.arrivals > 0 else float("nan"),
            "evaluations": totals.arrivals,
            "hist_labels": list(PB_HIST_LABELS),
            "hist": pb_hist.copy(),
        },
        adsorbed_count=totals.adsorbed,
        violator_count=totals.violators,
        suppressed_pushes=totals.suppressed,
        arrival_count=totals.arrivals,
        realized_umax=realized_umax,
        timestep_report={
            "a_priori": report.to_dict(),
            "realized_umax": realized_umax,
            "realized_ok": realized.ok if totals.arrivals > 0 else True,
        },
        wall_time_seconds=wall,
        config_echo={
            "problem": problem.to_dict(),
            "left": left.to_dict(),
            "numerics": numerics.to_dict(),
        },
    )


def field_view(counts: np.ndarray, n: int) -> WalkerField:
    """Wrap an existing counts array without copying."""
    return WalkerField(counts=counts, n=n)


def run_ensemble(
    problem: DimensionlessProblem,
    numerics: RwmNumerics,
    left: LeftBoundarySpec,
    members: int,
    engine: str = "auto",
) -> list[SolutionTrace]:
    """Run `members` walks with streams derived from (seed, member index)."""
    if members < 1:
        raise ValueError(f"members must be >= 1, got {members!r}")
    traces = []
    for m in range(members):
        member_numerics = RwmNumerics(
            dtau=numerics.dtau,
            n=numerics.n,
            seed=numerics.seed,
            member=m,
            snapshot_times=numerics.snapshot_times,
            strict=numerics.strict,
        )
        traces.append(run(problem, member_numerics, left, engine=engine))
    return traces
