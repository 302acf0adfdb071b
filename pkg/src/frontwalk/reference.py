"""Deterministic cross-check solver on the front-fixed domain.

The moving-domain problem is mapped onto the unit interval with the
boundary-fixing substitution ``y = z/h(tau)``, ``v(tau, y) = u(tau, y*h)``,
which turns the diffusion equation into

    v_tau = (1/h^2) v_yy + (y h'/h) v_y,   0 < y < 1,

with the front speed ``h' = A (v(tau,1) - sigma(h))`` and the outflow
condition ``v_y(1) + h h' v(tau,1) = 0`` at the front image y = 1. The left
end keeps the original fixed-value or surface mass-transfer condition with
the gradient rescaled by h.

Each time step is backward Euler on the coupled (field, front) pair. The
field update for a trial front speed is one pentadiagonal banded solve; the
front speed itself is then the root of the scalar residual

    F(h') = h' - A (v_E(h') - sigma(h + dt h')),

which is strictly increasing in h' (a faster front lowers the front value
through the outflow row and raises sigma), so bisection-safe root finding
converges without drama. The implicitness is not optional: evaluating h'
from the previous step's front value couples the kinetic law to the outflow
row through an algebraic loop whose gain grows with A h and does not shrink
with dt, and in the dimensional-parameter regime that explicit coupling
oscillates and collapses the front. The diffusion part being implicit also
matters on its own, because h starts at values where an explicit field
update would need a hopeless time step.

Both boundary rows use second-order one-sided differences, so the system is
pentadiagonal. The convective term is differenced centrally where the cell
Peclet number allows and switches to first-order upwinding on cells where it
does not (|y_e h' h| dy / 2 > 1), keeping the interior operator an M-matrix
for any front speed.

This solver shares no code with the walker implementation; it exists to give
the walk an independent target.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .model import DimensionlessProblem, ForcingSpec, ProfileSpec, SigmaSpec
from .solver import LeftBoundarySpec
from .trace import ProfileSnapshot, SolutionTrace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReferenceMesh:
    """Spatial elements on the unit interval and the time step."""

    elements: int
    dt: float

    def __post_init__(self):
        if self.elements < 2:
            raise ValueError(f"mesh needs at least 2 elements, got {self.elements!r}")
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")

    def to_dict(self) -> dict:
        return {"elements": self.elements, "dt": self.dt}


@dataclass(frozen=True)
class TransformedProblem:
    """Problem data expressed on the fixed domain y in [0, 1]."""

    biot: float
    thiele: float
    henry: float
    h0: float
    length: float
    t_final: float
    left_kind: str
    u_left: float
    forcing: ForcingSpec
    sigma: SigmaSpec
    u0: ProfileSpec

    def initial_values(self, y: np.ndarray) -> np.ndarray:
        return np.array([self.u0.value_at(float(yy) * self.h0) for yy in y])


def transform_problem(problem: DimensionlessProblem, left: LeftBoundarySpec) -> TransformedProblem:
    """Carry the moving-domain data over to the unit interval."""
    return TransformedProblem(
        biot=problem.biot,
        thiele=problem.thiele,
        henry=problem.henry,
        h0=problem.h0,
        length=problem.length,
        t_final=problem.t_final,
        left_kind=left.kind,
        u_left=left.u_value,
        forcing=problem.forcing,
        sigma=problem.sigma_tilde,
        u0=problem.u0,
    )


def _solve_front_speed(residual, guess: float, hp_floor: float, tau: float) -> float:
    """Root of the strictly increasing coupled front-speed residual.

    Starts from the explicit-coupling guess, expands a sign-changing bracket
    (never reaching hp_floor, the speed that would collapse the domain within
    one step), then closes in with Brent's method.
    """
    lo_cap = hp_floor + 1e-9 * (1.0 + abs(hp_floor))
    p = guess if np.isfinite(guess) else 0.0
    p = max(p, 0.5 * hp_floor)
    f = residual(p)
    if f == 0.0:
        return p
    step = 0.25 * abs(p) + 1.0
    if f > 0.0:
        hi = p
        lo = max(hi - step, 0.5 * (hi + lo_cap))
        for _ in range(200):
            if residual(lo) <= 0.0:
                break
            hi = lo
            step *= 4.0
            lo = max(hi - step, 0.5 * (hi + lo_cap))
        else:
            raise RuntimeError(f"front speed bracket failed at tau={tau!r}")
    else:
        lo = p
        hi = lo + step
        for _ in range(200):
            if residual(hi) >= 0.0:
                break
            lo = hi
            step *= 4.0
            hi = lo + step
        else:
            raise RuntimeError(f"front speed bracket failed at tau={tau!r}")
    return float(brentq(residual, lo, hi, xtol=1e-9 * (1.0 + abs(p)), maxiter=200))


def solve_reference(
    problem: DimensionlessProblem,
    mesh: ReferenceMesh,
    left: LeftBoundarySpec,
    snapshot_times: tuple[float, ...] = (),
) -> SolutionTrace:
    """Integrate the transformed system and return its trace.

    Records front position, total mass and left-boundary value at every time
    step; profiles at the requested times are reported on the physical nodes
    z = y*h of the step nearest to each request. Stops early when the front
    reaches the outer edge of the sample.
    """
    t_start = time.perf_counter()
    tp = transform_problem(problem, left)
    for t_snap in snapshot_times:
        if not 0.0 <= t_snap <= problem.t_final:
            raise ValueError(f"snapshot time {t_snap!r} outside [0, {problem.t_final!r}]")

    E = mesh.elements
    dy = 1.0 / E
    y = np.linspace(0.0, 1.0, E + 1)
    v = tp.initial_values(y).astype(np.float64)
    if np.any(v < 0.0):
        raise ValueError("initial profile is negative somewhere on the lattice")
    h = tp.h0

    if problem.t_final > 0.0:
        n_steps = max(1, int(math.ceil(problem.t_final / mesh.dt - 1e-12)))
    else:
        n_steps = 0

    def realized_time(j: int) -> float:
        return min(j * mesh.dt, problem.t_final)

    snapshot_plan: dict[int, list[float]] = {}
    for t_snap in snapshot_times:
        j_snap = min(int(round(t_snap / mesh.dt)), n_steps)
        snapshot_plan.setdefault(j_snap, []).append(t_snap)

    taus = [0.0]
    fronts = [h]
    masses = [h * float(np.trapezoid(v, dx=dy))]
    lefts = [float(v[0])]
    snapshots: list[ProfileSnapshot] = []

    def emit_snapshots(j: int) -> None:
        for requested in snapshot_plan.get(j, ()):
            snapshots.append(
                ProfileSnapshot(
                    requested_tau=requested,
                    realized_tau=realized_time(j),
                    z=y * h,
                    u=v.copy(),
                )
            )

    emit_snapshots(0)

    ab = np.zeros((5, E + 1))
    rhs = np.zeros(E + 1)
    interior = np.arange(1, E)
    stopped_early = False
    j = 0
    tau = 0.0
    while j < n_steps:
        tau_new = realized_time(j + 1)
        dt = tau_new - tau
        if dt <= 0.0:
            j += 1
            continue

        forcing_now = tp.forcing.value_at(tau_new) if tp.left_kind == "robin" else 0.0

        def field_for(hp: float) -> np.ndarray:
            h_trial = h + dt * hp
            alpha = dt / (h_trial * h_trial * dy * dy)
            beta = dt * y[interior] * hp / (2.0 * h_trial * dy)
            # hybrid convection differencing: central while |beta| <= alpha,
            # first-order upwind where central would lose monotonicity
            central = np.abs(beta) <= alpha
            up_fwd = ~central & (beta > 0.0)
            up_bwd = ~central & (beta < 0.0)
            lower = np.where(central, -alpha + beta,
                             np.where(up_bwd, -alpha + 2.0 * beta, -alpha))
            diag = np.where(central, 1.0 + 2.0 * alpha,
                            1.0 + 2.0 * alpha + 2.0 * np.abs(beta))
            upper = np.where(central, -alpha - beta,
                             np.where(up_fwd, -alpha - 2.0 * beta, -alpha))
            ab.fill(0.0)
            # interior rows e = 1..E-1: entries (e, e-1), (e, e), (e, e+1)
            ab[3, interior - 1] = lower
            ab[2, interior] = diag
            ab[1, interior + 1] = upper
            rhs[interior] = v[interior]
            if tp.left_kind == "dirichlet":
                ab[2, 0] = 1.0
                rhs[0] = tp.u_left
            else:
                ab[2, 0] = -3.0 - 2.0 * dy * h_trial * tp.biot * tp.henry
                ab[1, 1] = 4.0
                ab[0, 2] = -1.0
                rhs[0] = -2.0 * dy * h_trial * tp.biot * forcing_now
            ab[4, E - 2] = 1.0
            ab[3, E - 1] = -4.0
            ab[2, E] = 3.0 + 2.0 * dy * h_trial * hp
            rhs[E] = 0.0
            return solve_banded((2, 2), ab, rhs)

        def residual(hp: float) -> float:
            h_trial = h + dt * hp
            w = field_for(hp)
            return hp - tp.thiele * (float(w[E]) - tp.sigma.value_at(h_trial))

        hp = _solve_front_speed(residual, tp.thiele * (float(v[E]) - tp.sigma.value_at(h)),
                                hp_floor=-h / dt, tau=tau_new)
        h_new = h + dt * hp
        if h_new >= tp.length:
            stopped_early = True
            logger.info("front reached the sample edge at tau=%g; stopping", tau)
            break
        v = field_for(hp)
        if not np.all(np.isfinite(v)):
            raise RuntimeError(f"field update produced non-finite values at tau={tau_new!r}")

        h = h_new
        tau = tau_new
        j += 1
        taus.append(tau)
        fronts.append(h)
        masses.append(h * float(np.trapezoid(v, dx=dy)))
        lefts.append(float(v[0]))
        emit_snapshots(j)

    if stopped_early:
        for j_snap in sorted(snapshot_plan):
            if j_snap > j:
                for requested in snapshot_plan[j_snap]:
                    snapshots.append(
                        ProfileSnapshot(
                            requested_tau=requested,
                            realized_tau=tau,
                            z=y * h,
                            u=v.copy(),
                        )
                    )

    wall = time.perf_counter() - t_start
    return SolutionTrace(
        kind="reference",
        tau=np.asarray(taus),
        front=np.asarray(fronts),
        mass=np.asarray(masses),
        left_u=np.asarray(lefts),
        snapshots=snapshots,
        discretization={
            "elements": E,
            "dy": dy,
            "dt": mesh.dt,
            "n_steps": n_steps,
            "stopped_early": stopped_early,
        },
        n=1,
        wall_time_seconds=wall,
        config_echo={
            "problem": problem.to_dict(),
            "left": left.to_dict(),
            "reference": mesh.to_dict(),
        },
    )
