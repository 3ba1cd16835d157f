import numpy as np
import pytest

from strucbath.errors import TruncationError
from strucbath.models import (SystemModel, build_qubit_ho_model,
                              build_qubit_model, observable_series)
from strucbath.spectral import lorentzian, map_g0_to_alpha
from strucbath.trwa import solve_trwa


def assemble_composite_by_loops(delta, omega0, g0, fock_cut):
    """Independent element-by-element assembly of the qubit-HO Hamiltonian."""
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    sz = np.array([[-1.0, 0.0], [0.0, 1.0]])
    dim = 2 * fock_cut
    h = np.zeros((dim, dim))
    for q in range(2):
        for n in range(fock_cut):
            i = q * fock_cut + n
            for qp in range(2):
                for npr in range(fock_cut):
                    j = qp * fock_cut + npr
                    val = 0.0
                    if n == npr:
                        val += -0.5 * delta * sx[q, qp]
                        if q == qp:
                            val += omega0 * n
                    if npr == n - 1:
                        val += g0 * sz[q, qp] * np.sqrt(n)
                    if npr == n + 1:
                        val += g0 * sz[q, qp] * np.sqrt(n + 1)
                    h[i, j] = val
    return h


class TestQubitModel:
    def test_initial_population(self):
        m = build_qubit_model(1.0)
        vals, residue = observable_series(m, m.rho0)
        assert vals[0] == pytest.approx(1.0, abs=1e-14)
        assert residue <= 1e-14

    def test_h0_matrix_elements(self):
        m = build_qubit_model(0.7)
        assert m.h0[0, 1] == pytest.approx(-0.35)
        assert m.h0[1, 0] == pytest.approx(-0.35)
        assert m.h0[0, 0] == 0.0 and m.h0[1, 1] == 0.0

    def test_dvr_values(self):
        m = build_qubit_model(1.0)
        assert np.array_equal(m.dvr_values, [-0.5, 0.5])

    def test_rejects_bad_delta(self):
        with pytest.raises(ValueError):
            build_qubit_model(0.0)


class TestQubitHoModel:
    def test_decoupled_limit(self):
        model, report = build_qubit_ho_model(0.6, 1.0, 0.0, fock_cut=100,
                                             m_keep=4)
        evals = report.kept_eigenvalues
        # qubit doublet split by delta on top of the oscillator ground state
        assert evals[1] - evals[0] == pytest.approx(0.6, abs=1e-10)
        assert np.allclose(model.dvr_values + model.dvr_values[::-1], 0.0,
                           atol=1e-10)

    def test_level_repulsion_on_resonance(self):
        _, report = build_qubit_ho_model(1.0, 1.0, 0.1, fock_cut=200, m_keep=6)
        split = report.kept_eigenvalues[2] - report.kept_eigenvalues[1]
        assert split == pytest.approx(2 * 0.1, rel=0.1)

    def test_off_resonance_two_states_suffice(self):
        _, report = build_qubit_ho_model(0.1, 1.0, 0.01, fock_cut=200, m_keep=2)
        assert report.retained_norm >= 0.999

    def test_matches_independent_assembly(self):
        h_ref = assemble_composite_by_loops(0.8, 1.0, 0.15, 30)
        evals_ref = np.linalg.eigvalsh(h_ref)
        _, report = build_qubit_ho_model(0.8, 1.0, 0.15, fock_cut=30, m_keep=5)
        assert np.allclose(report.kept_eigenvalues, evals_ref[:5], atol=1e-12)

    def test_truncation_error_when_subspace_too_small(self):
        with pytest.raises(TruncationError):
            build_qubit_ho_model(1.0, 1.0, 0.9, fock_cut=200, m_keep=2)

    def test_fock_cut_independence(self):
        _, a = build_qubit_ho_model(1.0, 1.0, 0.1, fock_cut=100, m_keep=6)
        _, b = build_qubit_ho_model(1.0, 1.0, 0.1, fock_cut=200, m_keep=6)
        assert np.max(np.abs(a.kept_eigenvalues - b.kept_eigenvalues)) <= 1e-8

    def test_dvr_transform_preserves_spectrum(self):
        model, report = build_qubit_ho_model(1.0, 1.0, 0.1, fock_cut=200,
                                             m_keep=6)
        evals = np.linalg.eigvalsh(model.h0)
        assert np.max(np.abs(evals - report.kept_eigenvalues)) <= 1e-10

    def test_dvr_values_strictly_ascending_generic(self):
        model, _ = build_qubit_ho_model(1.0, 1.0, 0.1, fock_cut=200, m_keep=6)
        assert np.all(np.diff(model.dvr_values) > 0)

    def test_deterministic_construction(self):
        a, _ = build_qubit_ho_model(1.0, 1.0, 0.1, fock_cut=100, m_keep=6)
        b, _ = build_qubit_ho_model(1.0, 1.0, 0.1, fock_cut=100, m_keep=6)
        assert np.array_equal(a.h0, b.h0)
        assert np.array_equal(a.rho0, b.rho0)

    def test_spectrum_matches_trwa_quasi_poles(self):
        # closed-system excitation energies against the analytic peak
        # positions at small HO-bath coupling
        g0, gamma = 0.1, 0.005
        alpha = map_g0_to_alpha(g0, gamma, 1.0)
        sol = solve_trwa(lorentzian(alpha, 1.0, gamma), 1.0)
        _, report = build_qubit_ho_model(1.0, 1.0, g0, fock_cut=200, m_keep=6)
        exc = report.kept_eigenvalues[1:3] - report.kept_eigenvalues[0]
        side_poles = [sol.quasi_poles[0], sol.quasi_poles[-1]]
        for e, p in zip(sorted(exc), sorted(side_poles)):
            assert abs(e - p) <= 0.02

    def test_headroom_precondition(self):
        with pytest.raises(ValueError):
            build_qubit_ho_model(1.0, 1.0, 0.1, fock_cut=20, m_keep=6)


class TestObservableSeries:
    def test_exact_initial_state(self):
        m = build_qubit_model(1.0)
        vals, _ = observable_series(m, [m.rho0])
        assert vals[0] == pytest.approx(1.0, abs=1e-14)

    def test_truncated_initial_state_reports_loss(self):
        model, report = build_qubit_ho_model(1.0, 1.0, 0.1, fock_cut=200,
                                             m_keep=6)
        vals, _ = observable_series(model, model.rho0)
        loss = 1.0 - report.retained_norm**2
        assert vals[0] < 1.0
        assert abs(vals[0] - 1.0) <= 10.0 * loss + 1e-10

    def test_maximally_mixed_gives_zero(self):
        m = build_qubit_model(1.0)
        vals, _ = observable_series(m, 0.5 * np.eye(2, dtype=complex))
        assert vals[0] == pytest.approx(0.0, abs=1e-14)

    def test_dimension_mismatch(self):
        m = build_qubit_model(1.0)
        with pytest.raises(ValueError):
            observable_series(m, np.eye(3, dtype=complex) / 3.0)


class TestSystemModelValidation:
    def test_non_hermitian_h0_rejected(self):
        with pytest.raises(ValueError):
            SystemModel(dimension=2,
                        h0=np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex),
                        dvr_values=np.array([-0.5, 0.5]),
                        observable=np.eye(2, dtype=complex),
                        rho0=np.diag([1.0, 0.0]).astype(complex))

    def test_unnormalized_rho0_rejected(self):
        with pytest.raises(ValueError):
            SystemModel(dimension=2, h0=np.zeros((2, 2), dtype=complex),
                        dvr_values=np.array([-0.5, 0.5]),
                        observable=np.eye(2, dtype=complex),
                        rho0=np.diag([1.0, 1.0]).astype(complex))

    def test_descending_dvr_rejected(self):
        with pytest.raises(ValueError):
            SystemModel(dimension=2, h0=np.zeros((2, 2), dtype=complex),
                        dvr_values=np.array([0.5, -0.5]),
                        observable=np.eye(2, dtype=complex),
                        rho0=np.diag([1.0, 0.0]).astype(complex))
