"""Finite-dimensional system models for the path-integral engine.

Two systems are built here, both expressed in the discrete variable
representation (DVR), i.e. the eigenbasis of the coordinate operator that
couples to the bath:

* the bare qubit, coordinate (1/2) sigma_z with DVR values -1/2, +1/2;
* the qubit plus one harmonic oscillator, diagonalized in a large product
  space, truncated to the lowest ``m_keep`` eigenstates, with coordinate
  X = B^dag + B projected into the kept subspace before its own
  diagonalization defines the DVR.
"""

from dataclasses import dataclass

import numpy as np

from .errors import TruncationError

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]])  # basis ordered by DVR value


@dataclass(frozen=True)
class SystemModel:
    """Bare system in its DVR basis."""

    dimension: int
    h0: np.ndarray            # hermitian, energy units
    dvr_values: np.ndarray    # coordinate eigenvalues, ascending
    observable: np.ndarray    # hermitian
    rho0: np.ndarray          # trace one, positive semidefinite
    label: str = "system"

    def __post_init__(self):
        m = self.dimension
        for name, mat in (("h0", self.h0), ("observable", self.observable),
                          ("rho0", self.rho0)):
            if mat.shape != (m, m):
                raise ValueError(f"{name} must be {m}x{m}")
        if np.max(np.abs(self.h0 - self.h0.conj().T)) > 1e-12 * max(
                1.0, np.max(np.abs(self.h0))):
            raise ValueError("h0 must be hermitian")
        if np.max(np.abs(self.observable - self.observable.conj().T)) > 1e-10:
            raise ValueError("observable must be hermitian")
        if self.dvr_values.shape != (m,):
            raise ValueError("dvr_values must have one value per state")
        if np.any(np.diff(self.dvr_values) < 0):
            raise ValueError("dvr_values must be sorted ascending")
        if abs(np.trace(self.rho0) - 1.0) > 1e-12:
            raise ValueError("rho0 must have unit trace")
        if np.min(np.linalg.eigvalsh(0.5 * (self.rho0 + self.rho0.conj().T))) \
                < -1e-12:
            raise ValueError("rho0 must be positive semidefinite")
        for arr in (self.h0, self.dvr_values, self.observable, self.rho0):
            arr.setflags(write=False)


@dataclass(frozen=True)
class TruncationReport:
    """Bookkeeping for the kept low-energy subspace."""

    n_full: int
    m_kept: int
    kept_eigenvalues: np.ndarray
    retained_norm: float

    def __post_init__(self):
        if np.any(np.diff(self.kept_eigenvalues) < 0):
            raise ValueError("eigenvalues must be ascending")
        if not 0.0 < self.retained_norm <= 1.0 + 1e-12:
            raise ValueError("retained norm must lie in (0, 1]")


def build_qubit_model(delta: float) -> SystemModel:
    """Bare qubit: H0 = -(delta/2) sigma_x, coordinate (1/2) sigma_z.

    DVR basis = sigma_z eigenbasis ordered (-1/2, +1/2); the initial state is
    the upper sigma_z eigenstate, the observable is sigma_z itself.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    h0 = -0.5 * delta * SIGMA_X.astype(complex)
    rho0 = np.zeros((2, 2), dtype=complex)
    rho0[1, 1] = 1.0
    return SystemModel(dimension=2, h0=h0,
                       dvr_values=np.array([-0.5, 0.5]),
                       observable=SIGMA_Z.astype(complex),
                       rho0=rho0, label="qubit")


def _phase_fix(vectors):
    # largest-magnitude component of each column made real positive
    idx = np.argmax(np.abs(vectors), axis=0)
    phases = vectors[idx, np.arange(vectors.shape[1])]
    return vectors * (np.abs(phases) / np.where(phases == 0, 1.0, phases))


def build_qubit_ho_model(delta: float, omega0: float, g0: float,
                         fock_cut: int = 200, m_keep: int = 6,
                         min_retained_norm: float = 0.999):
    """Truncated qubit-oscillator composite and its truncation report.

    Assembles H = -(delta/2) sigma_x + omega0 B^dag B + g0 sigma_z (B^dag + B)
    on the 2*fock_cut product space, keeps the m_keep lowest eigenstates,
    projects the coordinate X = B^dag + B into that subspace and diagonalizes
    it to obtain the DVR.  The initial state is the upper sigma_z eigenstate
    times the oscillator ground state, projected and renormalized.
    """
    if delta <= 0 or omega0 <= 0 or g0 < 0:
        raise ValueError("delta, omega0 must be positive and g0 >= 0")
    if m_keep < 2:
        raise ValueError("m_keep must be at least 2")
    if 2 * fock_cut < 10 * m_keep:
        raise ValueError("fock_cut too small: need 2*fock_cut >= 10*m_keep")

    n = np.arange(fock_cut)
    ladder = np.diag(np.sqrt(n[1:]), 1)          # annihilation operator B
    x_ho = ladder + ladder.T                      # B^dag + B
    number = np.diag(n.astype(float))
    eye_q = np.eye(2)
    eye_ho = np.eye(fock_cut)

    h_full = (-0.5 * delta * np.kron(SIGMA_X, eye_ho)
              + omega0 * np.kron(eye_q, number)
              + g0 * np.kron(SIGMA_Z, x_ho))
    evals, evecs = np.linalg.eigh(h_full)
    kept_vals = evals[:m_keep]
    kept_vecs = evecs[:, :m_keep]

    x_full = np.kron(eye_q, x_ho)
    x_m = kept_vecs.T @ x_full @ kept_vecs
    dvr_vals, dvr_vecs = np.linalg.eigh(0.5 * (x_m + x_m.T))
    dvr_vecs = _phase_fix(dvr_vecs)

    # full-space initial state |up_z> (x) |0>
    psi_full = np.zeros(2 * fock_cut)
    psi_full[fock_cut] = 1.0  # qubit index 1 = s=+1/2 block, oscillator n=0
    coeffs = kept_vecs.T @ psi_full
    retained = float(np.linalg.norm(coeffs))
    if retained < min_retained_norm:
        raise TruncationError(
            f"initial state retains norm {retained:.6f} < {min_retained_norm}"
            f" in the kept subspace; increase m_keep (currently {m_keep})")
    psi_kept = coeffs / retained

    to_dvr = dvr_vecs.conj().T
    h0_dvr = to_dvr @ np.diag(kept_vals).astype(complex) @ dvr_vecs
    obs_kept = kept_vecs.T @ np.kron(SIGMA_Z, eye_ho) @ kept_vecs
    obs_dvr = to_dvr @ obs_kept.astype(complex) @ dvr_vecs
    psi_dvr = to_dvr @ psi_kept.astype(complex)
    rho0 = np.outer(psi_dvr, psi_dvr.conj())

    model = SystemModel(dimension=m_keep,
                        h0=0.5 * (h0_dvr + h0_dvr.conj().T),
                        dvr_values=dvr_vals,
                        observable=0.5 * (obs_dvr + obs_dvr.conj().T),
                        rho0=rho0, label="qubit+ho")
    report = TruncationReport(n_full=2 * fock_cut, m_kept=m_keep,
                              kept_eigenvalues=kept_vals,
                              retained_norm=retained)
    return model, report


def observable_series(model: SystemModel, rho_series):
    """Tr(observable * rho) at each step; real parts with residue diagnostic.

    Returns (values, max_imag_residue).
    """
    rhos = np.asarray(rho_series)
    if rhos.ndim == 2:
        rhos = rhos[None, :, :]
    if rhos.shape[-2:] != (model.dimension, model.dimension):
        raise ValueError("density matrices do not match the model dimension")
    traces = np.einsum("ij,kji->k", model.observable, rhos)
    return np.real(traces), float(np.max(np.abs(np.imag(traces))))
