"""Post-processing: mass, profiles, trace comparison, ensemble statistics.

Comparisons are always made at the walk's realized times: the deterministic
trace is interpolated in time onto the walk's final instant, and in space
onto the walk's lattice nodes, never the other way around. A profile is
extended by zero beyond its front when the two fronts disagree, which charges
any front mismatch to the profile error instead of hiding it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trace import ProfileSnapshot, SolutionTrace


def total_mass(z: np.ndarray, u: np.ndarray, h: float) -> float:
    """Integral of u over [0, h]: trapezoid on the nodes plus the sliver
    [z[-1], h] taken at the last nodal value."""
    z = np.asarray(z, dtype=float)
    u = np.asarray(u, dtype=float)
    if z.shape != u.shape or z.ndim != 1 or z.size < 1:
        raise ValueError(f"z and u must be equal-length 1-d arrays, got {z.shape} and {u.shape}")
    if h < z[-1]:
        raise ValueError(f"front h={h!r} lies inside the sampled nodes (last z={z[-1]!r})")
    base = float(np.trapezoid(u, z)) if z.size > 1 else 0.0
    return base + (h - float(z[-1])) * float(u[-1])


def profile_at(trace: SolutionTrace, tau: float) -> ProfileSnapshot:
    """Snapshot recorded for the requested time; exact match required."""
    for snap in trace.snapshots:
        if np.isclose(snap.requested_tau, tau, rtol=1e-12, atol=1e-15):
            return snap
    available = [s.requested_tau for s in trace.snapshots]
    raise ValueError(f"no profile stored for tau={tau!r}; stored times: {available!r}")


def _series_at(trace: SolutionTrace, values: np.ndarray, tau: float) -> float:
    if trace.tau[-1] < tau and not np.isclose(trace.tau[-1], tau, rtol=1e-9, atol=1e-15):
        raise ValueError(
            f"trace ends at tau={trace.tau[-1]!r}, cannot evaluate at tau={tau!r}"
        )
    return float(np.interp(tau, trace.tau, values))


@dataclass(frozen=True)
class ProfileError:
    """Pointwise profile discrepancy on the walk's lattice nodes."""

    requested_tau: float
    realized_tau: float
    l2: float
    linf: float
    l2_rel: float
    linf_rel: float
    ref_max: float

    def to_dict(self) -> dict:
        return {
            "requested_tau": self.requested_tau,
            "realized_tau": self.realized_tau,
            "l2": self.l2,
            "linf": self.linf,
            "l2_rel": self.l2_rel,
            "linf_rel": self.linf_rel,
            "ref_max": self.ref_max,
        }


@dataclass(frozen=True)
class ErrorReport:
    """Walk-versus-deterministic discrepancies at the walk's realized times."""

    at_tau: float
    front_value: float
    front_ref: float
    front_rel: float
    mass_value: float
    mass_ref: float
    mass_rel: float
    profiles: tuple[ProfileError, ...]

    def to_dict(self) -> dict:
        return {
            "at_tau": self.at_tau,
            "front_value": self.front_value,
            "front_ref": self.front_ref,
            "front_rel": self.front_rel,
            "mass_value": self.mass_value,
            "mass_ref": self.mass_ref,
            "mass_rel": self.mass_rel,
            "profiles": [p.to_dict() for p in self.profiles],
        }

    def render(self) -> str:
        lines = [
            f"at tau = {self.at_tau:.17g}",
            f"front: {self.front_value:.17g} vs {self.front_ref:.17g} (rel {self.front_rel:.6g})",
            f"mass:  {self.mass_value:.17g} vs {self.mass_ref:.17g} (rel {self.mass_rel:.6g})",
        ]
        for p in self.profiles:
            lines.append(
                f"profile tau={p.requested_tau:.17g}: Linf {p.linf:.6g} "
                f"(rel {p.linf_rel:.6g}), L2 {p.l2:.6g} (rel {p.l2_rel:.6g})"
            )
        return "\n".join(lines)


def _check_same_problem(a: SolutionTrace, b: SolutionTrace) -> None:
    ea, eb = a.config_echo, b.config_echo
    for key in ("problem", "left"):
        if ea.get(key) != eb.get(key):
            raise ValueError(f"traces describe different runs: {key!r} sections differ")


def compare(rwm: SolutionTrace, ref: SolutionTrace, check_config: bool = True) -> ErrorReport:
    """Front, mass and profile discrepancies of a walk against the
    deterministic solution of the same problem."""
    if check_config:
        _check_same_problem(rwm, ref)
    at_tau = float(rwm.tau[-1])
    front_value = float(rwm.front[-1])
    mass_value = float(rwm.mass[-1])
    front_ref = _series_at(ref, ref.front, at_tau)
    mass_ref = _series_at(ref, ref.mass, at_tau)
    front_rel = abs(front_value - front_ref) / abs(front_ref)
    mass_rel = abs(mass_value - mass_ref) / abs(mass_ref)

    ref_by_tau = {snap.requested_tau: snap for snap in ref.snapshots}
    profiles = []
    for snap in rwm.snapshots:
        other = ref_by_tau.get(snap.requested_tau)
        if other is None:
            continue
        u_ref = np.interp(snap.z, other.z, other.u, right=0.0)
        diff = snap.u - u_ref
        if snap.z.size > 1:
            dz = float(snap.z[1] - snap.z[0])
        else:
            dz = 1.0
        l2 = float(np.sqrt(np.sum(diff * diff) * dz))
        linf = float(np.max(np.abs(diff)))
        ref_l2 = float(np.sqrt(np.sum(u_ref * u_ref) * dz))
        ref_max = float(np.max(np.abs(other.u)))
        profiles.append(
            ProfileError(
                requested_tau=snap.requested_tau,
                realized_tau=snap.realized_tau,
                l2=l2,
                linf=linf,
                l2_rel=l2 / ref_l2 if ref_l2 > 0 else float("inf"),
                linf_rel=linf / ref_max if ref_max > 0 else float("inf"),
                ref_max=ref_max,
            )
        )
    return ErrorReport(
        at_tau=at_tau,
        front_value=front_value,
        front_ref=front_ref,
        front_rel=front_rel,
        mass_value=mass_value,
        mass_ref=mass_ref,
        mass_rel=mass_rel,
        profiles=tuple(profiles),
    )


@dataclass(frozen=True)
class EnsembleStats:
    """Per-time mean and spread over the members of an ensemble."""

    tau: np.ndarray
    front_mean: np.ndarray
    front_std: np.ndarray
    mass_mean: np.ndarray
    mass_std: np.ndarray
    members: int


def ensemble_stats(traces: list[SolutionTrace]) -> EnsembleStats:
    """Member-wise mean and sample deviation of front and mass series.

    All members must describe the same problem, boundary and numerical
    controls (only the member index may differ). Series are truncated to the
    shortest member before averaging; members can stop at different steps
    when a front exhausts the sample.
    """
    if not traces:
        raise ValueError("ensemble_stats needs at least one trace")
    first = traces[0].config_echo
    for t in traces[1:]:
        _check_same_problem(traces[0], t)
        a = dict(first.get("numerics", {}))
        b = dict(t.config_echo.get("numerics", {}))
        a.pop("member", None)
        b.pop("member", None)
        if a != b:
            raise ValueError("traces carry different numerical controls; refusing to average")
    m = min(t.tau.size for t in traces)
    tau = traces[0].tau[:m]
    for t in traces[1:]:
        if not np.array_equal(t.tau[:m], tau):
            raise ValueError("traces disagree on the time grid; refusing to average")
    fronts = np.stack([t.front[:m] for t in traces])
    masses = np.stack([t.mass[:m] for t in traces])
    ddof = 1 if len(traces) > 1 else 0
    return EnsembleStats(
        tau=tau,
        front_mean=fronts.mean(axis=0),
        front_std=fronts.std(axis=0, ddof=ddof),
        mass_mean=masses.mean(axis=0),
        mass_std=masses.std(axis=0, ddof=ddof),
        members=len(traces),
    )
