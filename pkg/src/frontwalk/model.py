"""Problem data and the dimensional <-> dimensionless maps.

The physical model is one-dimensional diffusion of a penetrant into a dense
solid occupying ``0 < x < s(t)``: a diffusion equation inside the layer, a
surface mass-transfer (Robin) condition at ``x = 0``, a kinetic law
``s'(t) = a0 * (m(t, s(t)) - sigma(s(t)))`` driving the penetration front,
and a flux condition at the front consistent with the moving domain.

Scaling by a reference length ``x_ref`` and reference concentration ``m_ref``
(``z = x/x_ref``, ``tau = t*D/x_ref**2``, ``u = m/m_ref``, ``h = s/x_ref``)
turns the data into two dimensionless groups plus rescaled functions:

* ``biot = beta * x_ref / D`` (surface mass-transfer vs diffusion),
* ``thiele = x_ref * m_ref * a0 / D`` (front kinetics vs diffusion).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .trace import ProfileSnapshot, SolutionTrace


@dataclass(frozen=True)
class SigmaSpec:
    """Front resistance term sigma as a function of front position.

    kind
        ``"linear"``: value = ``coefficient * position``.
        ``"table"``: linear interpolation through ``(positions, values)``;
        evaluation clamps to the end values outside the tabulated range.
    """

    kind: str
    coefficient: float = 0.0
    positions: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("linear", "table"):
            raise ValueError(f"sigma kind must be 'linear' or 'table', got {self.kind!r}")
        if self.kind == "table":
            if len(self.positions) != len(self.values) or len(self.positions) < 2:
                raise ValueError("sigma table needs >= 2 aligned (position, value) pairs")
            if any(b <= a for a, b in zip(self.positions, self.positions[1:])):
                raise ValueError("sigma table positions must be strictly increasing")

    def value_at(self, position: float) -> float:
        if self.kind == "linear":
            return self.coefficient * position
        return float(np.interp(position, self.positions, self.values))

    def scaled(self, position_scale: float, value_scale: float) -> "SigmaSpec":
        """Rescale argument and value, e.g. (s, sigma) -> (h, sigma_tilde)."""
        if self.kind == "linear":
            return SigmaSpec("linear", self.coefficient * position_scale / value_scale)
        return SigmaSpec(
            "table",
            positions=tuple(p / position_scale for p in self.positions),
            values=tuple(v / value_scale for v in self.values),
        )

    def to_dict(self) -> dict:
        if self.kind == "linear":
            return {"kind": "linear", "coefficient": self.coefficient}
        return {"kind": "table", "positions": list(self.positions), "values": list(self.values)}


@dataclass(frozen=True)
class ProfileSpec:
    """Initial concentration profile, constant or tabulated in position.

    Tabulated profiles interpolate linearly and are undefined outside the
    tabulated range: evaluating there raises, because silently extrapolating
    an initial condition hides configuration mistakes.
    """

    kind: str
    constant: float = 0.0
    positions: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("constant", "table"):
            raise ValueError(f"profile kind must be 'constant' or 'table', got {self.kind!r}")
        if self.kind == "table":
            if len(self.positions) != len(self.values) or len(self.positions) < 2:
                raise ValueError("profile table needs >= 2 aligned (position, value) pairs")
            if any(b <= a for a, b in zip(self.positions, self.positions[1:])):
                raise ValueError("profile table positions must be strictly increasing")

    def value_at(self, position: float) -> float:
        if self.kind == "constant":
            return self.constant
        if position < self.positions[0] or position > self.positions[-1]:
            raise ValueError(
                f"profile undefined at position {position!r}; "
                f"table covers [{self.positions[0]!r}, {self.positions[-1]!r}]"
            )
        return float(np.interp(position, self.positions, self.values))

    def scaled(self, position_scale: float, value_scale: float) -> "ProfileSpec":
        if self.kind == "constant":
            return ProfileSpec("constant", self.constant / value_scale)
        return ProfileSpec(
            "table",
            positions=tuple(p / position_scale for p in self.positions),
            values=tuple(v / value_scale for v in self.values),
        )

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "constant": self.constant}
        return {"kind": "table", "positions": list(self.positions), "values": list(self.values)}


@dataclass(frozen=True)
class ForcingSpec:
    """Exterior boundary source as a function of time.

    Either a constant or a step-interpolated table: the value at time t is the
    entry at the largest tabulated time <= t. Tables must start at time 0 so
    every simulated time has a defined value.
    """

    kind: str
    constant: float = 0.0
    times: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("constant", "table"):
            raise ValueError(f"forcing kind must be 'constant' or 'table', got {self.kind!r}")
        if self.kind == "table":
            if len(self.times) != len(self.values) or not self.times:
                raise ValueError("forcing table needs >= 1 aligned (time, value) pairs")
            if self.times[0] != 0.0:
                raise ValueError("forcing table must start at time 0")
            if any(b <= a for a, b in zip(self.times, self.times[1:])):
                raise ValueError("forcing table times must be strictly increasing")

    def value_at(self, time: float) -> float:
        if self.kind == "constant":
            return self.constant
        idx = int(np.searchsorted(self.times, time, side="right")) - 1
        return self.values[max(idx, 0)]

    def scaled(self, time_scale: float, value_scale: float) -> "ForcingSpec":
        if self.kind == "constant":
            return ForcingSpec("constant", self.constant / value_scale)
        return ForcingSpec(
            "table",
            times=tuple(t / time_scale for t in self.times),
            values=tuple(v / value_scale for v in self.values),
        )

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "constant": self.constant}
        return {"kind": "table", "times": list(self.times), "values": list(self.values)}


@dataclass(frozen=True)
class PhysicalParameters:
    """Dimensional problem data.

    Attributes
    ----------
    diffusivity : float
        Penetrant diffusivity D inside the solid, length^2/time.
    surface_rate : float
        Surface mass-transfer coefficient beta at x = 0, length/time.
    kinetic_rate : float
        Kinetic coefficient a0 in the front law, length^4/(time*mass).
    henry : float
        Henry-type partition constant H in the surface condition.
    s0 : float
        Initial front position, length.
    m0 : ProfileSpec
        Initial concentration profile m(0, x), mass/length^3.
    boundary_source : ForcingSpec
        Exterior concentration b(t) driving the surface condition.
    sigma : SigmaSpec
        Front resistance sigma(s), mass/length^3.
    length : float
        Sample thickness; the front must stay inside (0, length).
    t_final : float
        Final simulated time.
    x_ref, m_ref : float
        Reference length and concentration used for scaling.
    """

    diffusivity: float
    surface_rate: float
    kinetic_rate: float
    henry: float
    s0: float
    m0: ProfileSpec
    boundary_source: ForcingSpec
    sigma: SigmaSpec
    length: float
    t_final: float
    x_ref: float
    m_ref: float

    def __post_init__(self):
        for name in ("diffusivity", "surface_rate", "kinetic_rate", "henry",
                     "s0", "length", "t_final", "x_ref", "m_ref"):
            value = getattr(self, name)
            if not value > 0.0:
                raise ValueError(f"{name} must be positive, got {value!r}")
        if not self.s0 < self.length:
            raise ValueError(f"s0 must be < length, got s0={self.s0!r}, length={self.length!r}")

    @property
    def time_scale(self) -> float:
        """Diffusion time unit x_ref**2 / D."""
        return self.x_ref**2 / self.diffusivity

    def to_dict(self) -> dict:
        return {
            "diffusivity": self.diffusivity,
            "surface_rate": self.surface_rate,
            "kinetic_rate": self.kinetic_rate,
            "henry": self.henry,
            "s0": self.s0,
            "m0": self.m0.to_dict(),
            "boundary_source": self.boundary_source.to_dict(),
            "sigma": self.sigma.to_dict(),
            "length": self.length,
            "t_final": self.t_final,
            "x_ref": self.x_ref,
            "m_ref": self.m_ref,
        }


@dataclass(frozen=True)
class DimensionlessProblem:
    """Scaled problem data consumed by both solvers.

    Attributes
    ----------
    biot : float
        beta * x_ref / D; weight of the surface condition.
    thiele : float
        x_ref * m_ref * a0 / D; weight of the front kinetics.
    henry : float
        Partition constant (scale-invariant).
    h0 : float
        Initial front position, 0 < h0 < length.
    length : float
        Outer edge of the scaled domain.
    t_final : float
        Final scaled time T.
    u0 : ProfileSpec
        Initial concentration u(0, z).
    forcing : ForcingSpec
        Scaled exterior source b(tau)/m_ref.
    sigma_tilde : SigmaSpec
        Scaled front resistance sigma(h)/m_ref.
    """

    biot: float
    thiele: float
    henry: float
    h0: float
    length: float
    t_final: float
    u0: ProfileSpec
    forcing: ForcingSpec
    sigma_tilde: SigmaSpec

    def __post_init__(self):
        for name in ("biot", "thiele", "henry"):
            value = getattr(self, name)
            if not value > 0.0:
                raise ValueError(f"{name} must be positive, got {value!r}")
        # t_final == 0 is allowed: a degenerate run that reports the initial
        # state only
        if not self.t_final >= 0.0:
            raise ValueError(f"t_final must be nonnegative, got {self.t_final!r}")
        if not 0.0 < self.h0 < self.length:
            raise ValueError(f"h0 must be < L, got h0={self.h0!r}, L={self.length!r}")

    def to_dict(self) -> dict:
        return {
            "biot": self.biot,
            "thiele": self.thiele,
            "henry": self.henry,
            "h0": self.h0,
            "length": self.length,
            "t_final": self.t_final,
            "u0": self.u0.to_dict(),
            "forcing": self.forcing.to_dict(),
            "sigma_tilde": self.sigma_tilde.to_dict(),
        }


def nondimensionalize(p: PhysicalParameters) -> DimensionlessProblem:
    """Scale dimensional data into a DimensionlessProblem.

    Lengths divide by x_ref, times by x_ref**2/D, concentrations by m_ref.
    """
    time_scale = p.time_scale
    return DimensionlessProblem(
        biot=p.surface_rate * p.x_ref / p.diffusivity,
        thiele=p.x_ref * p.m_ref * p.kinetic_rate / p.diffusivity,
        henry=p.henry,
        h0=p.s0 / p.x_ref,
        length=p.length / p.x_ref,
        t_final=p.t_final / time_scale,
        u0=p.m0.scaled(p.x_ref, p.m_ref),
        forcing=p.boundary_source.scaled(time_scale, p.m_ref),
        sigma_tilde=p.sigma.scaled(p.x_ref, p.m_ref),
    )


def redimensionalize(sol: SolutionTrace, p: PhysicalParameters) -> SolutionTrace:
    """Map a dimensionless trace back to dimensional units.

    Inverse of the scaling in ``nondimensionalize``: s = h*x_ref,
    t = tau*x_ref**2/D, m = u*m_ref. Mass (a line integral of concentration)
    scales by m_ref*x_ref.
    """
    if sol.units != "dimensionless":
        raise ValueError(f"expected a dimensionless trace, got units={sol.units!r}")
    echo = sol.config_echo.get("problem")
    if echo is not None and echo != nondimensionalize(p).to_dict():
        raise ValueError("trace was produced from a different problem than the scales given")
    time_scale = p.time_scale
    snapshots = [
        ProfileSnapshot(
            requested_tau=s.requested_tau * time_scale,
            realized_tau=s.realized_tau * time_scale,
            z=s.z * p.x_ref,
            u=s.u * p.m_ref,
        )
        for s in sol.snapshots
    ]
    return replace(
        sol,
        tau=sol.tau * time_scale,
        front=sol.front * p.x_ref,
        mass=sol.mass * (p.m_ref * p.x_ref),
        left_u=sol.left_u * p.m_ref,
        snapshots=snapshots,
        units="dimensional",
    )
