"""Deterministic solver on the front-fixed domain."""

import math

import numpy as np
import pytest

from frontwalk.model import DimensionlessProblem, ForcingSpec, ProfileSpec, SigmaSpec
from frontwalk.reference import (
    ReferenceMesh,
    TransformedProblem,
    solve_reference,
    transform_problem,
)
from frontwalk.solver import LeftBoundarySpec


def dirichlet_problem(**overrides):
    base = dict(
        biot=1.0,
        thiele=2500.0,
        henry=1.0,
        h0=0.001,
        length=1.0,
        t_final=1e-4,
        u0=ProfileSpec("constant", 1.0),
        forcing=ForcingSpec("constant", 1.0),
        sigma_tilde=SigmaSpec("linear", 0.05),
    )
    base.update(overrides)
    return DimensionlessProblem(**base)


def robin_problem(**overrides):
    return dirichlet_problem(
        biot=overrides.pop("biot", 5000.0),
        henry=overrides.pop("henry", 2.5),
        forcing=overrides.pop("forcing", ForcingSpec("constant", 10.0)),
        **overrides,
    )


class TestMeshAndTransform:
    def test_mesh_validation(self):
        with pytest.raises(ValueError, match="at least 2"):
            ReferenceMesh(elements=1, dt=1e-6)
        with pytest.raises(ValueError, match="dt"):
            ReferenceMesh(elements=10, dt=0.0)
        assert ReferenceMesh(elements=10, dt=1e-6).to_dict() == {"elements": 10, "dt": 1e-6}

    def test_transform_carries_data(self):
        p = dirichlet_problem()
        left = LeftBoundarySpec("dirichlet", u_value=10.0)
        tp = transform_problem(p, left)
        assert isinstance(tp, TransformedProblem)
        assert tp.thiele == p.thiele and tp.h0 == p.h0
        assert tp.left_kind == "dirichlet" and tp.u_left == 10.0

    def test_initial_values_sample_the_moving_domain(self):
        prof = ProfileSpec("table", positions=(0.0, 1.0), values=(0.0, 10.0))
        tp = transform_problem(dirichlet_problem(u0=prof, h0=0.5), LeftBoundarySpec("robin"))
        y = np.linspace(0.0, 1.0, 5)
        # y=1 maps to z=h0=0.5 where the profile reads 5.0
        assert np.allclose(tp.initial_values(y), [0.0, 1.25, 2.5, 3.75, 5.0])

    def test_negative_initial_profile_rejected(self):
        prof = ProfileSpec("table", positions=(0.0, 1.0), values=(1.0, -1.0))
        p = dirichlet_problem(u0=prof, h0=0.9)
        with pytest.raises(ValueError, match="negative"):
            solve_reference(p, ReferenceMesh(elements=10, dt=1e-6), LeftBoundarySpec("robin"))


class TestAnalyticDecay:
    """A standing sine mode with a pinned front decays at a known rate.

    With a zero-value left boundary, a vanishing kinetic coefficient and no
    brake, the front stays at h = 1 and the field obeys the plain heat
    equation with a zero-gradient right end: u = exp(-(pi/2)^2 tau) *
    sin(pi z / 2), an oracle independent of this code base.
    """

    def run_decay(self, elements, dt, t_final=0.01):
        zs = np.linspace(0.0, 1.0, 201)
        u0 = ProfileSpec("table", positions=tuple(zs), values=tuple(np.sin(0.5 * math.pi * zs)))
        problem = dirichlet_problem(
            thiele=1e-12,
            sigma_tilde=SigmaSpec("linear", 0.0),
            h0=1.0,
            length=1.25,
            t_final=t_final,
            u0=u0,
        )
        left = LeftBoundarySpec("dirichlet", u_value=0.0)
        return solve_reference(problem, ReferenceMesh(elements=elements, dt=dt), left,
                               snapshot_times=(t_final,))

    def test_field_matches_separated_solution(self):
        t_final = 0.01
        trace = self.run_decay(elements=100, dt=2e-5, t_final=t_final)
        decay = math.exp(-0.25 * math.pi**2 * t_final)
        assert trace.front[-1] == pytest.approx(1.0, abs=1e-9)
        snap = trace.snapshots[-1]
        exact = decay * np.sin(0.5 * math.pi * snap.z)
        assert float(np.max(np.abs(snap.u - exact))) < 1e-3
        assert trace.mass[-1] == pytest.approx(decay * 2.0 / math.pi, rel=1e-3)
        assert trace.left_u[-1] == pytest.approx(0.0, abs=1e-12)

    def test_decay_error_shrinks_with_the_mesh(self):
        t_final = 0.01
        decay = math.exp(-0.25 * math.pi**2 * t_final)

        def max_err(elements, dt):
            snap = self.run_decay(elements, dt, t_final).snapshots[-1]
            exact = decay * np.sin(0.5 * math.pi * snap.z)
            return float(np.max(np.abs(snap.u - exact)))

        coarse = max_err(25, 3.2e-4)
        fine = max_err(50, 8e-5)
        assert fine < coarse / 2.5


class TestFrozenRegressions:
    def test_dirichlet_regime(self):
        trace = solve_reference(
            dirichlet_problem(),
            ReferenceMesh(elements=100, dt=1e-7),
            LeftBoundarySpec("dirichlet", u_value=10.0),
        )
        assert trace.front[-1] == pytest.approx(0.03723271450498183, rel=1e-10)
        assert trace.mass[-1] == pytest.approx(0.11244219301337875, rel=1e-10)
        assert trace.tau[-1] == pytest.approx(1e-4, rel=1e-12)
        assert trace.kind == "reference"
        assert trace.discretization["stopped_early"] is False

    def test_robin_regime(self):
        trace = solve_reference(
            robin_problem(),
            ReferenceMesh(elements=100, dt=1e-7),
            LeftBoundarySpec("robin"),
        )
        assert trace.front[-1] == pytest.approx(0.033081102349178784, rel=1e-10)
        assert trace.left_u[-1] == pytest.approx(3.9819592471886924, rel=1e-10)
        assert trace.mass[-1] == pytest.approx(0.044497355323571845, rel=1e-10)


class TestBoundaryBehavior:
    def test_robin_left_value_saturates_at_large_biot(self):
        trace = solve_reference(
            robin_problem(biot=1e6),
            ReferenceMesh(elements=50, dt=1e-6),
            LeftBoundarySpec("robin"),
        )
        # the surface balance pins u(0) at forcing/henry when transfer is fast
        assert trace.left_u[-1] * 2.5 == pytest.approx(10.0, rel=2e-2)

    def test_dirichlet_left_value_is_exact(self):
        trace = solve_reference(
            dirichlet_problem(),
            ReferenceMesh(elements=50, dt=1e-6),
            LeftBoundarySpec("dirichlet", u_value=10.0),
        )
        assert np.allclose(trace.left_u[1:], 10.0)
        assert trace.left_u[0] == 1.0  # initial profile before the boundary acts


class TestFrontDynamics:
    def test_front_recedes_under_a_strong_brake(self):
        sigma = SigmaSpec("table", positions=(0.0, 1.0), values=(5.0, 5.0))
        p = dirichlet_problem(thiele=1.0, sigma_tilde=sigma, h0=0.1, t_final=0.01,
                              u0=ProfileSpec("constant", 1.0))
        trace = solve_reference(p, ReferenceMesh(elements=50, dt=1e-4),
                                LeftBoundarySpec("dirichlet", u_value=1.0))
        assert trace.front[-1] < trace.front[0]
        assert np.all(trace.front > 0.0)
        assert np.all(np.isfinite(trace.mass))

    def test_early_stop_at_the_sample_edge(self):
        p = dirichlet_problem(thiele=50.0, sigma_tilde=SigmaSpec("linear", 0.0),
                              h0=0.5, length=0.6, t_final=0.01)
        trace = solve_reference(p, ReferenceMesh(elements=30, dt=1e-4),
                                LeftBoundarySpec("dirichlet", u_value=2.0),
                                snapshot_times=(0.01,))
        assert trace.discretization["stopped_early"] is True
        assert trace.tau[-1] < p.t_final
        assert trace.front[-1] < p.length
        # the horizon snapshot reports the last computed state
        snap = trace.snapshots[-1]
        assert snap.requested_tau == 0.01
        assert snap.realized_tau == pytest.approx(trace.tau[-1])
        assert snap.z[-1] == pytest.approx(trace.front[-1])


class TestSeriesAndSnapshots:
    def test_snapshot_time_mapping(self):
        trace = solve_reference(
            dirichlet_problem(),
            ReferenceMesh(elements=25, dt=1e-6),
            LeftBoundarySpec("dirichlet", u_value=10.0),
            snapshot_times=(0.0, 3.3e-5, 1e-4),
        )
        taus = [s.realized_tau for s in trace.snapshots]
        assert taus[0] == 0.0
        assert taus[1] == pytest.approx(33 * 1e-6)
        assert taus[2] == pytest.approx(1e-4)
        snap = trace.snapshots[1]
        assert snap.z[0] == 0.0
        j = int(round(snap.realized_tau / 1e-6))
        assert snap.z[-1] == pytest.approx(trace.front[j])

    def test_snapshot_outside_horizon_rejected(self):
        with pytest.raises(ValueError, match="snapshot time"):
            solve_reference(dirichlet_problem(), ReferenceMesh(elements=25, dt=1e-6),
                            LeftBoundarySpec("dirichlet", u_value=10.0),
                            snapshot_times=(2e-4,))

    def test_mass_equals_profile_integral(self):
        trace = solve_reference(
            dirichlet_problem(),
            ReferenceMesh(elements=25, dt=1e-6),
            LeftBoundarySpec("dirichlet", u_value=10.0),
            snapshot_times=(5e-5,),
        )
        snap = trace.snapshots[0]
        j = int(round(snap.realized_tau / 1e-6))
        assert trace.mass[j] == pytest.approx(float(np.trapezoid(snap.u, snap.z)), rel=1e-12)

    def test_final_step_lands_exactly_on_the_horizon(self):
        # dt does not divide t_final; the last step is shortened
        trace = solve_reference(
            dirichlet_problem(t_final=1.05e-5),
            ReferenceMesh(elements=25, dt=1e-6),
            LeftBoundarySpec("dirichlet", u_value=10.0),
        )
        assert trace.tau[-1] == pytest.approx(1.05e-5, rel=1e-12)
        assert trace.tau.size == 12

    def test_t_final_zero_records_initial_state(self):
        trace = solve_reference(
            dirichlet_problem(t_final=0.0),
            ReferenceMesh(elements=25, dt=1e-6),
            LeftBoundarySpec("dirichlet", u_value=10.0),
        )
        assert trace.tau.size == 1
        assert trace.front[0] == 0.001


class TestSelfConvergence:
    def test_front_converges_quadratically(self):
        """Halving dy (with dt scaled as dy^2) cuts the front error by ~4."""
        p = dirichlet_problem()
        left = LeftBoundarySpec("dirichlet", u_value=10.0)

        def front_at(elements):
            dt = 5e-4 / (elements * elements)
            mesh = ReferenceMesh(elements=elements, dt=dt)
            return float(solve_reference(p, mesh, left).front[-1])

        f25, f50, f100 = front_at(25), front_at(50), front_at(100)
        coarse_gap = abs(f50 - f25)
        fine_gap = abs(f100 - f50)
        assert fine_gap < coarse_gap / 2.0
        assert f100 == pytest.approx(0.0372, rel=5e-3)
