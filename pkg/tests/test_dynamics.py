import csv

import numpy as np
import pytest

from superosc.catalog import SystemSpec
from superosc.dynamics import (
    hamilton_rhs,
    implicit_midpoint_step,
    integrate,
    resolve_watch,
    rk_reference,
    write_csv,
)
from superosc.errors import EvaluationDomainError, StepFailureError
from superosc.phase import PhaseState


class TestHamiltonRhs:
    def test_euclidean_gradient(self):
        spec = SystemSpec("euclidean-osc", 2, omega=1.0)
        rhs = hamilton_rhs(spec, PhaseState([1, 0], [0, 0]))
        assert np.allclose(rhs, [0, 0, -1, 0])

    def test_free_rest_state_is_stationary(self):
        for kind, params in (("free-poincare", dict(kappa=1.0)),
                             ("free-beltrami", dict(kappa=-0.5)),
                             ("free-darboux", dict(a=1.0))):
            spec = SystemSpec(kind, 2, **params)
            rhs = hamilton_rhs(spec, PhaseState([0.3, -0.2], [0.0, 0.0]))
            assert np.allclose(rhs, 0.0, atol=1e-15)

    def test_darboux_hand_value(self):
        spec = SystemSpec("free-darboux", 2, a=1.0)
        rhs = hamilton_rhs(spec, PhaseState([0, 0], [1, 0]))
        assert np.allclose(rhs, [2, 0, 0, 0])


class TestMidpointStep:
    def test_matches_rotation_locally(self):
        # Exact flow of the unit harmonic oscillator is a rotation; one
        # midpoint step agrees to O(h^3).
        spec = SystemSpec("euclidean-osc", 1, omega=1.0)
        h = 0.01
        out = implicit_midpoint_step(spec, PhaseState([1.0], [0.0]), h)
        assert abs(out.q[0] - np.cos(h)) <= 1e-7
        assert abs(out.p[0] + np.sin(h)) <= 1e-7

    def test_fixed_point_of_zero_field(self):
        spec = SystemSpec("free-beltrami", 2, kappa=1.0)
        state = PhaseState([0.4, -0.3], [0.0, 0.0])
        out = implicit_midpoint_step(spec, state, 0.1)
        assert np.allclose(out.q, state.q, atol=1e-14)
        assert np.allclose(out.p, state.p, atol=1e-14)

    def test_rejects_non_positive_step(self):
        spec = SystemSpec("euclidean-osc", 1, omega=1.0)
        with pytest.raises(ValueError):
            implicit_midpoint_step(spec, PhaseState([1.0], [0.0]), 0.0)

    def test_time_reversibility(self):
        spec = SystemSpec("beltrami-osc", 3, omega=1.0, kappa=-1.0, deltas=(0.1,))
        state = PhaseState([0.3, 0.1, -0.2], [0.2, -0.4, 0.1])
        forward = implicit_midpoint_step(spec, state, 0.05, newton_tol=1e-14)
        # Reversing means stepping the time-mirrored state and mirroring back.
        mirrored = PhaseState(forward.q, -forward.p)
        back = implicit_midpoint_step(spec, mirrored, 0.05, newton_tol=1e-14)
        assert np.allclose(back.q, state.q, atol=1e-10)
        assert np.allclose(-back.p, state.p, atol=1e-10)

    def test_step_map_is_symplectic(self):
        # det of the finite-difference step Jacobian must be 1.
        spec = SystemSpec("beltrami-osc", 2, omega=1.0, kappa=1.0)
        z0 = np.array([0.3, -0.1, 0.4, 0.2])
        h_step = 0.05
        fd = 1e-4

        def step_map(z):
            out = implicit_midpoint_step(
                spec, PhaseState(z[:2], z[2:]), h_step, newton_tol=1e-14)
            return out.as_vector()

        jac = np.empty((4, 4))
        for j in range(4):
            zp = z0.copy(); zp[j] += fd
            zm = z0.copy(); zm[j] -= fd
            jac[:, j] = (step_map(zp) - step_map(zm)) / (2 * fd)
        assert abs(np.linalg.det(jac) - 1.0) <= 1e-8

    def test_newton_failure_surfaces(self):
        spec = SystemSpec("euclidean-osc", 1, omega=1.0, deltas=(50.0,))
        with pytest.raises(StepFailureError):
            implicit_midpoint_step(spec, PhaseState([2.0], [0.0]), 5.0,
                                   newton_tol=1e-15, newton_max_iter=2)


class TestIntegrate:
    def test_energy_conservation_harmonic(self):
        spec = SystemSpec("euclidean-osc", 1, omega=1.0)
        traj = integrate(spec, PhaseState([1.0], [0.0]), 1e-3, 10.0,
                         watch=("H",), stride=100)
        assert traj.status == "ok"
        assert traj.max_drift()["H"] <= 1e-8

    def test_universal_drift_small(self):
        spec = SystemSpec("beltrami-osc", 3, omega=1.0, kappa=-1.0,
                          deltas=(0.1,))
        state0 = PhaseState([0.3, 0.2, -0.1], [0.2, -0.1, 0.25])
        traj = integrate(spec, state0, 1e-3, 5.0, watch=("C", "C_", "H"),
                         stride=50)
        assert traj.status == "ok"
        assert all(v <= 1e-6 for v in traj.max_drift().values())

    def test_times_strictly_increasing_and_strided(self):
        spec = SystemSpec("euclidean-osc", 2, omega=1.0)
        traj = integrate(spec, PhaseState([1, 0], [0, 1]), 0.01, 1.0, stride=10)
        assert np.all(np.diff(traj.times) > 0)
        assert len(traj.times) == 11

    def test_zero_time_single_row(self):
        spec = SystemSpec("euclidean-osc", 2, omega=1.0)
        traj = integrate(spec, PhaseState([1, 0], [0, 1]), 1e-3, 0.0)
        assert len(traj.times) == 1
        assert traj.times[0] == 0.0

    def test_initial_state_outside_domain(self):
        spec = SystemSpec("beltrami-osc", 2, omega=1.0, kappa=-1.0)
        with pytest.raises(EvaluationDomainError):
            integrate(spec, PhaseState([0.9, 0.9], [0, 0]), 1e-3, 1.0)

    def test_partial_trajectory_on_step_failure(self):
        # An absurd step size with a tiny Newton budget cannot converge;
        # the run ends early with a partial trajectory and failure time.
        spec = SystemSpec("euclidean-osc", 1, omega=1.0, deltas=(50.0,))
        traj = integrate(spec, PhaseState([2.0], [0.0]), 5.0, 50.0,
                         newton_max_iter=2, max_halvings=0, stride=1)
        assert traj.status == "step-failure"
        assert traj.failure_time is not None
        assert len(traj.times) >= 1

    def test_stale_candidate_diverges_for_perturbed_system(self):
        spec = SystemSpec("euclidean-osc", 3, omega=1.0, deltas=(0.1,))
        state0 = PhaseState([0.8, 0.3, -0.4], [0.1, 0.5, -0.2])
        traj = integrate(spec, state0, 1e-3, 10.0, watch=("I1", "C"), stride=100)
        drift = traj.max_drift()
        assert drift["I1"] > 1e-2          # the broken candidate
        assert drift["C(2)"] <= 1e-6       # chain integrals still conserved
        # An independent adaptive run confirms the magnitude.
        ref = rk_reference(spec, state0, 1e-3, 10.0, tol=1e-11,
                           t_eval=traj.times, watch=("I1",))
        assert ref.max_drift()["I1"] == pytest.approx(drift["I1"], rel=1e-2)

    def test_watch_tokens(self):
        spec = SystemSpec("darboux3-A", 3, omega=1.0, a=1.0)
        names = [obs.name for obs in resolve_watch(spec, ["all"])]
        assert names == ["C(2)", "C(3)", "C_(2)", "I1", "I2", "I3"]
        names = [obs.name for obs in resolve_watch(spec, ["C_2", "I2", "H"])]
        assert names == ["C_(2)", "I2"]
        with pytest.raises(ValueError):
            resolve_watch(spec, ["Q7"])


class TestRkReference:
    def test_matches_closed_form(self):
        spec = SystemSpec("euclidean-osc", 1, omega=1.0)
        t_eval = np.linspace(0.0, 10.0, 101)
        traj = rk_reference(spec, PhaseState([1.0], [0.0]), 1e-3, 10.0,
                            tol=1e-10, t_eval=t_eval)
        assert np.max(np.abs(traj.q[:, 0] - np.cos(t_eval))) <= 1e-8
        assert np.max(np.abs(traj.p[:, 0] + np.sin(t_eval))) <= 1e-8

    def test_cross_method_agreement(self):
        spec = SystemSpec("beltrami-osc", 2, omega=1.0, kappa=1.0)
        state0 = PhaseState([0.3, -0.2], [0.4, 0.1])
        mid = integrate(spec, state0, 1e-3, 10.0, stride=100)
        ref = rk_reference(spec, state0, 1e-3, 10.0, tol=1e-11, t_eval=mid.times)
        assert np.max(np.abs(mid.q - ref.q)) <= 1e-6
        assert np.max(np.abs(mid.p - ref.p)) <= 1e-6

    def test_radial_geodesic_stays_radial(self):
        spec = SystemSpec("free-darboux", 3, a=1.0)
        traj = rk_reference(spec, PhaseState([0, 0, 0], [0.5, 0, 0]), 1e-2, 5.0,
                            tol=1e-10)
        assert np.max(np.abs(traj.q[:, 1:])) <= 1e-12
        assert np.max(np.abs(traj.p[:, 1:])) <= 1e-12


class TestCsvExport:
    def test_header_and_precision(self, tmp_path):
        spec = SystemSpec("euclidean-osc", 2, omega=1.0)
        traj = integrate(spec, PhaseState([1, 0], [0, 1]), 0.1, 1.0,
                         watch=("C2",), stride=2)
        path = tmp_path / "traj.csv"
        write_csv(traj, path)
        with open(path) as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["t", "q1", "q2", "p1", "p2", "H", "C(2)"]
        assert len(rows) == 1 + len(traj.times)
        value = float(rows[1][5])
        assert value == pytest.approx(1.0)
        # 17 significant digits are preserved for a non-terminating value
        assert any(len(cell.replace("-", "").replace(".", "")) >= 16
                   for cell in rows[2])

    def test_zero_time_csv(self, tmp_path):
        spec = SystemSpec("euclidean-osc", 1, omega=1.0)
        traj = integrate(spec, PhaseState([1.0], [0.5]), 1e-3, 0.0)
        path = tmp_path / "single.csv"
        write_csv(traj, path)
        with open(path) as handle:
            rows = list(csv.reader(handle))
        assert len(rows) == 2
        assert rows[1][0] == "0"
