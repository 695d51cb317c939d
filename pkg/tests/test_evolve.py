import numpy as np
import pytest

from nhevolve import evolve, models, spectral
from nhevolve.errors import ArgumentError


def circle_path(delta0=0.0, g0=0.5, radius=0.2, total_time=50.0,
                omega=None, phi=0.3, pert=None):
    if omega is None:
        omega = -2 * np.pi / total_time
    spec = models.TrajectorySpec(delta0, g0, radius, total_time, omega, phi)
    return models.HamiltonianPath.circle(spec, perturbation=pert)


def constant_diag_path(values=(1j, -1j), t_end=1.0):
    mats = np.stack([np.diag(values)] * 2).astype(complex)
    return models.HamiltonianPath.from_table([0.0, t_end], mats)


def aligned_distance(a, b):
    phase = np.vdot(a, b)
    phase = phase / abs(phase)
    return np.linalg.norm(a * phase - b)


class TestPropagate:
    def test_zero_hamiltonian_is_identity(self):
        mats = np.zeros((2, 2, 2), dtype=complex)
        path = models.HamiltonianPath.from_table([0.0, 1.0], mats)
        psi0 = np.array([0.6, 0.8j])
        hist = evolve.propagate(path, psi0, steps=100, outputs=11)
        assert np.allclose(hist.final_state, psi0 / np.linalg.norm(psi0))
        assert np.allclose(hist.log_norm, 0.0, atol=1e-12)

    def test_constant_gain_loss_populations(self):
        path = constant_diag_path((1j, -1j), t_end=1.0)
        frame = spectral.build_frame(path, 100)
        psi0 = np.array([1.0, 1.0]) / np.sqrt(2)
        hist = evolve.propagate(path, psi0, steps=1000, outputs=101)
        evolve.extract_populations(frame, hist)
        expected = np.exp(2.0) / (np.exp(2.0) + np.exp(-2.0))
        assert abs(hist.populations[-1, 0] - expected) < 1e-6
        assert abs(expected - 0.98201) < 1e-5

    def test_landau_zener_transition_probability(self):
        path = models.HamiltonianPath.landau_zener(0.5, 0.25, 160.0)
        frame = spectral.build_frame(path, 800)
        psi0 = frame.initial_state("-")  # ground state at the left edge
        hist = evolve.propagate(path, psi0, steps=16000, outputs=801)
        evolve.extract_populations(frame, hist)
        p_formula = np.exp(-2 * np.pi * 0.25 ** 2 / 0.5)
        assert abs(hist.populations[-1, 0] - p_formula) < 0.05 * p_formula

    def test_norm_is_unity_and_populations_normalized(self):
        path = circle_path()
        frame = spectral.build_frame(path, 200)
        hist = evolve.propagate(path, frame.initial_state("-"), steps=2000,
                                outputs=201)
        evolve.extract_populations(frame, hist)
        assert np.max(np.abs(np.linalg.norm(hist.states, axis=1) - 1)) < 1e-12
        assert np.max(np.abs(hist.populations.sum(axis=1) - 1)) < 1e-12

    def test_hermitian_path_conserves_norm(self):
        path = models.HamiltonianPath.landau_zener(0.5, 0.25, 160.0)
        hist = evolve.propagate(path, np.array([1.0, 0.0]), steps=8000,
                                outputs=101)
        assert np.max(np.abs(hist.log_norm)) < 1e-9 * 8000

    def test_composition_over_subspans(self):
        path = circle_path()
        psi0 = np.array([1.0, 0.3 - 0.2j])
        full = evolve.propagate(path, psi0, steps=2000, outputs=3)
        first = evolve.propagate(path, psi0, steps=1000, outputs=3,
                                 span=(0.0, 25.0))
        second = evolve.propagate(path, first.final_state, steps=1000,
                                  outputs=3, span=(25.0, 50.0))
        assert np.linalg.norm(full.final_state - second.final_state) < 1e-9
        total = first.log_norm[-1] + second.log_norm[-1]
        assert abs(full.log_norm[-1] - total) < 1e-9

    def test_populations_invariant_under_state_rescaling(self):
        path = circle_path()
        frame = spectral.build_frame(path, 200)
        psi0 = frame.initial_state("-")
        a = evolve.propagate(path, psi0, steps=1000, outputs=101)
        b = evolve.propagate(path, (2.5 - 1.5j) * psi0, steps=1000, outputs=101)
        evolve.extract_populations(frame, a)
        evolve.extract_populations(frame, b)
        assert np.max(np.abs(a.populations - b.populations)) < 1e-12

    def test_argument_validation(self):
        path = circle_path()
        with pytest.raises(ArgumentError):
            evolve.propagate(path, np.zeros(2), steps=100)
        with pytest.raises(ArgumentError):
            evolve.propagate(path, np.array([1.0, 0.0]), steps=10, outputs=12)
        with pytest.raises(ArgumentError):
            evolve.propagate(path, np.array([1.0, 0.0]), steps=100, outputs=34)


class TestReferencePropagate:
    def test_refine_one_is_identical(self):
        path = circle_path()
        psi0 = np.array([1.0, 0.5j])
        a = evolve.propagate(path, psi0, steps=500, outputs=6)
        b = evolve.reference_propagate(path, psi0, steps=500, refine=1, outputs=6)
        assert np.array_equal(a.states, b.states)
        assert np.array_equal(a.log_norm, b.log_norm)

    def test_second_order_convergence(self, rng):
        path = circle_path(delta0=rng.uniform(-0.1, 0.1),
                           g0=rng.uniform(0.4, 0.6), phi=rng.uniform(0, np.pi))
        psi0 = np.array([1.0, 0.2 + 0.1j])
        ref = evolve.reference_propagate(path, psi0, steps=800, refine=8,
                                         outputs=2).final_state
        e1 = aligned_distance(
            evolve.propagate(path, psi0, steps=800, outputs=2).final_state, ref)
        e2 = aligned_distance(
            evolve.propagate(path, psi0, steps=1600, outputs=2).final_state, ref)
        assert 3.0 < e1 / e2 < 5.0

    def test_refine_validation(self):
        with pytest.raises(ArgumentError):
            evolve.reference_propagate(circle_path(), np.array([1.0, 0]), 100, 0)


class TestExtractPopulations:
    def test_eigenvector_gives_pure_population(self):
        path = circle_path()
        frame = spectral.build_frame(path, 200)
        k = 57
        hist = evolve.StateHistory(
            times=np.array([frame.times[k]]),
            states=frame.frames[k][:, 1][None, :],
            log_norm=np.zeros(1),
        )
        evolve.extract_populations(frame, hist)
        assert np.allclose(hist.populations[0], [0.0, 1.0], atol=1e-10)

    def test_equal_superposition_in_orthonormal_frame(self):
        path = constant_diag_path()
        frame = spectral.build_frame(path, 100)
        hist = evolve.StateHistory(
            times=np.array([0.0]),
            states=(np.array([1.0, 1.0]) / np.sqrt(2))[None, :],
            log_norm=np.zeros(1),
        )
        evolve.extract_populations(frame, hist)
        assert np.allclose(hist.populations[0], [0.5, 0.5], atol=1e-12)

    def test_off_grid_times_need_interpolation(self):
        path = circle_path()
        frame = spectral.build_frame(path, 200)
        hist = evolve.StateHistory(
            times=np.array([0.1234]),
            states=np.array([[1.0, 0.0]], dtype=complex),
            log_norm=np.zeros(1),
        )
        with pytest.raises(ArgumentError):
            evolve.extract_populations(frame, hist)
        evolve.extract_populations(frame, hist, interpolate=True)
        assert abs(hist.populations[0].sum() - 1) < 1e-12


class TestExport:
    def test_history_csv(self, tmp_path):
        path = circle_path()
        frame = spectral.build_frame(path, 200)
        hist = evolve.propagate(path, frame.initial_state("-"), steps=400,
                                outputs=201)
        evolve.extract_populations(frame, hist)
        out = tmp_path / "history.csv"
        evolve.export_csv(hist, out)
        rows = out.read_text().strip().splitlines()
        assert rows[0].split(",") == [
            "t", "re_psi0", "im_psi0", "re_psi1", "im_psi1", "log_norm",
            "p_+", "p_-"]
        assert len(rows) == 202
