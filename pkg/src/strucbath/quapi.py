"""Numerically exact reduced dynamics by iterative path-integral tensors.

The discretized influence functional weights forward/backward path pairs
(s_k^+, s_k^-) by

    I = exp{ - sum_{k >= k'} [s_k^+ - s_k^-] [eta_{kk'} s_{k'}^+
                                              - conj(eta_{kk'}) s_{k'}^-] }

where the coefficients are double integrals of the bath response kernel
alpha(t' - t'') over the time windows implied by the symmetric splitting of
the short-time propagator: interior slices own a window of width dt centered
on their grid point, while the first and last slices own half windows.  The
local counter-term contributes an extra i*mu*width to each diagonal
coefficient, with mu = (1/pi) int J(w)/w dw.

Coefficients are evaluated by reducing the window double integrals
analytically to single frequency integrals,

    int_A dt' int_B dt'' alpha(t'-t'')
        = (1/pi) int_0^inf dw J(w) [coth(beta w/2) Re F_AB(w) + i Im F_AB(w)],

    F_AB(w) = (int_A e^{-iwt} dt) (int_B e^{+iwt} dt),

done on the same oscillation-resolving panel grid used elsewhere.  This is
numerically equivalent to direct double quadrature of the kernel but exact in
the time directions; the tests pin it against adaptive double quadrature.

Propagation contracts an augmented tensor of rank dk_max over path-pair
indices.  Interactions at separations beyond dk_max are dropped; the first
dk_max steps keep the full growing history.  One caveat of the rolling
scheme: the pair at exactly the memory horizon is folded in with an
interior-window coefficient before its slice is summed away, so readouts
cannot retro-correct it to the end-window variant -- a term that is below
the truncation threshold whenever dk_max is converged.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._quadrature import coth
from .errors import ConfigError, ResourceLimitError
from .models import SystemModel, observable_series
from .spectral import (ResponseKernel, counterterm_mu, evaluate_j,
                       frequency_grid)

DEFAULT_TENSOR_CAP = 2**26


def _interval_transform(omega, a, b, sign):
    """int_a^b exp(sign * i * w * t) dt, stable for small w*(b-a)."""
    iw = 1j * sign * omega
    return np.exp(iw * a) * np.expm1(iw * (b - a)) / iw


def _pair_coefficient(omega, weights, jw, thermal, window_late, window_early):
    a1, a2 = window_late
    b1, b2 = window_early
    f = _interval_transform(omega, a1, a2, -1.0) \
        * _interval_transform(omega, b1, b2, +1.0)
    re = float(np.dot(weights, thermal * np.real(f)))
    im = float(np.dot(weights, jw * np.imag(f)))
    return (re + 1j * im) / math.pi


def _self_coefficient(omega, weights, jw, thermal, width):
    x = omega * width
    small = x < 1e-3
    cospart = np.where(small, width**2 * (0.5 - x**2 / 24.0),
                       (1.0 - np.cos(x)) / omega**2)
    sinpart = np.where(small, width**2 * x * (1.0 / 6.0 - x**2 / 120.0),
                       (x - np.sin(x)) / omega**2)
    re = float(np.dot(weights, thermal * cospart))
    im = float(np.dot(weights, jw * sinpart))
    return (re - 1j * im) / math.pi


@dataclass
class InfluenceTable:
    """Discretized influence coefficients and their path-pair factor matrices.

    Coefficient arrays are indexed by slice separation d = 0..dk_max; entry 0
    of the pair-variant arrays is unused.  ``eta_*`` hold the bare kernel
    double integrals; the counter-term enters only the exponentiated factor
    matrices through ``counter_mu``.
    """

    dt: float
    dk_max: int
    dvr_values: np.ndarray
    beta: float
    eta_int: np.ndarray
    eta_first: np.ndarray
    eta_last: np.ndarray
    eta_last_first: np.ndarray
    counter_mu: float
    density: object = None
    _factors: dict = field(default_factory=dict, repr=False)

    # -- factor matrices over pair indices u = a*M + b ------------------

    def _pair_arrays(self):
        s = np.asarray(self.dvr_values, dtype=float)
        m = s.size
        sp = np.repeat(s, m)       # s^+ for u = a*M + b
        sm = np.tile(s, m)         # s^-
        return sp, sm

    def factor_matrix(self, eta):
        """F[u, v] = exp(-(s_u^+ - s_u^-)(eta s_v^+ - conj(eta) s_v^-))."""
        sp, sm = self._pair_arrays()
        expo = np.outer(sp - sm, eta * sp - np.conj(eta) * sm)
        return np.exp(-expo)

    def self_factor(self, eta, width):
        """Diagonal factor including the counter-term phase for one window."""
        sp, sm = self._pair_arrays()
        eta = eta + 1j * self.counter_mu * width
        return np.exp(-(sp - sm) * (eta * sp - np.conj(eta) * sm))

    def factors(self):
        """Cached bundle used by the propagation engine."""
        if not self._factors:
            dk = self.dk_max
            self._factors = {
                "f_int": [None] + [self.factor_matrix(self.eta_int[d])
                                   for d in range(1, dk + 1)],
                "f_first": [None] + [self.factor_matrix(self.eta_first[d])
                                     for d in range(1, dk + 1)],
                "f_last": [None] + [self.factor_matrix(self.eta_last[d])
                                    for d in range(1, dk + 1)],
                "f_last_first": [None] + [self.factor_matrix(
                    self.eta_last_first[d]) for d in range(1, dk + 1)],
                "f0_int": self.self_factor(self.eta_int[0], self.dt),
                "f0_first": self.self_factor(self.eta_first[0], 0.5 * self.dt),
                "f0_last": self.self_factor(self.eta_last[0], 0.5 * self.dt),
            }
        return self._factors


def build_influence_table(kernel: ResponseKernel, dt: float, dk_max: int,
                          dvr_values) -> InfluenceTable:
    """Window-integrated influence coefficients for one time step and memory.

    ``kernel`` must be built from a density already mapped to the generic
    QUAPI convention (see ``quapi_density_from_physical``).
    """
    if dt <= 0:
        raise ConfigError("dt must be positive")
    if dk_max < 1:
        raise ConfigError("dk_max must be at least 1")
    density = kernel.density
    if not density.is_zero and not density.quapi_scaled:
        raise ConfigError(
            "kernel density must be mapped with quapi_density_from_physical")
    if kernel.spacing > dt / 8.0:
        raise ConfigError(
            f"kernel grid spacing {kernel.spacing:g} too coarse for dt={dt:g}")
    if kernel.t_max + 1e-12 < (dk_max + 1) * dt:
        raise ConfigError(
            f"kernel sampled only to t={kernel.t_max:g} but the memory window "
            f"needs {(dk_max + 1) * dt:g}")

    dvr_values = np.asarray(dvr_values, dtype=float)
    shape = (dk_max + 1,)
    if density.is_zero:
        zeros = np.zeros(shape, dtype=complex)
        table = InfluenceTable(dt=dt, dk_max=dk_max, dvr_values=dvr_values,
                               beta=kernel.beta, eta_int=zeros,
                               eta_first=zeros.copy(), eta_last=zeros.copy(),
                               eta_last_first=zeros.copy(), counter_mu=0.0,
                               density=density)
        table.factors()
        return table

    x, wts = frequency_grid(density, t_span=(dk_max + 1) * dt,
                            nodes_per_panel=24, max_phase=40.0)
    jw = evaluate_j(density, x)
    thermal = jw if math.isinf(kernel.beta) \
        else jw * coth(0.5 * kernel.beta * x)

    h = 0.5 * dt
    eta_int = np.zeros(shape, dtype=complex)
    eta_first = np.zeros(shape, dtype=complex)
    eta_last = np.zeros(shape, dtype=complex)
    eta_last_first = np.zeros(shape, dtype=complex)

    eta_int[0] = _self_coefficient(x, wts, jw, thermal, dt)
    eta_first[0] = _self_coefficient(x, wts, jw, thermal, h)
    eta_last[0] = eta_first[0]
    eta_last_first[0] = eta_first[0]
    for d in range(1, dk_max + 1):
        c = d * dt
        eta_int[d] = _pair_coefficient(x, wts, jw, thermal,
                                       (c - h, c + h), (-h, h))
        eta_first[d] = _pair_coefficient(x, wts, jw, thermal,
                                         (c - h, c + h), (0.0, h))
        eta_last[d] = _pair_coefficient(x, wts, jw, thermal,
                                        (c - h, c), (-h, h))
        eta_last_first[d] = _pair_coefficient(x, wts, jw, thermal,
                                              (c - h, c), (0.0, h))

    table = InfluenceTable(dt=dt, dk_max=dk_max, dvr_values=dvr_values,
                           beta=kernel.beta, eta_int=eta_int,
                           eta_first=eta_first, eta_last=eta_last,
                           eta_last_first=eta_last_first,
                           counter_mu=counterterm_mu(density),
                           density=density)
    table.factors()      # built eagerly: tables are shared read-only
    return table


def influence_factor(table: InfluenceTable, path_window) -> complex:
    """Influence weight of one window of (s^+, s^-) pairs.

    Slices are treated with interior-window coefficients (no counter-term);
    the window may not exceed dk_max + 1 slices.
    """
    window = list(path_window)
    if len(window) > table.dk_max + 1:
        raise ValueError("window longer than dk_max + 1 slices")
    expo = 0.0 + 0.0j
    for k, (sp_k, sm_k) in enumerate(window):
        for kp in range(k + 1):
            eta = table.eta_int[k - kp]
            sp_p, sm_p = window[kp]
            expo += (sp_k - sm_k) * (eta * sp_p - np.conj(eta) * sm_p)
    return complex(np.exp(-expo))


def bare_propagator(model: SystemModel, dt: float) -> np.ndarray:
    """exp(-i H0 dt) in the DVR basis by exact eigendecomposition."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    h0 = np.asarray(model.h0)
    if np.max(np.abs(h0 - h0.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(h0))):
        raise ValueError("h0 must be hermitian")
    evals, evecs = np.linalg.eigh(h0)
    return (evecs * np.exp(-1j * evals * dt)) @ evecs.conj().T


class AugmentedState:
    """Rolling augmented density tensor of rank dk_max.

    Axis 0 is the newest slice; the oldest in-window slice is contracted away
    as each new slice enters.  The rolling tensor carries interior-window
    coefficients throughout; a readout terminates the incoming slice with the
    end-window variants directly, so every readout at n <= dk_max reproduces
    the untruncated path sum exactly.
    """

    def __init__(self, model: SystemModel, table: InfluenceTable,
                 max_entries: int = DEFAULT_TENSOR_CAP):
        if not np.allclose(model.dvr_values, table.dvr_values,
                           rtol=1e-12, atol=1e-12):
            raise ConfigError("model and influence table use different DVR values")
        m2 = model.dimension**2
        if m2**table.dk_max > max_entries:
            raise ResourceLimitError(
                f"augmented tensor would hold {m2**table.dk_max} entries, "
                f"above the cap {max_entries}")
        self.model = model
        self.table = table
        self.m = model.dimension
        self.m2 = m2
        self.dk = table.dk_max
        self.n = 0
        self.tensor = np.asarray(model.rho0, dtype=complex).reshape(m2).copy()
        f = table.factors()
        propagator = bare_propagator(model, table.dt)
        t_pair = np.kron(propagator, propagator.conj())
        self._e = {
            "int": t_pair * f["f_int"][1] * f["f0_int"][:, None],
            "first": t_pair * f["f_first"][1] * f["f0_int"][:, None],
            "last": t_pair * f["f_last"][1] * f["f0_last"][:, None],
            "last_first": t_pair * f["f_last_first"][1] * f["f0_last"][:, None],
        }
        self._f = f

    @property
    def window(self) -> int:
        return min(self.n + 1, self.dk)

    def _advance(self, terminate: bool):
        """Add slice n+1; either roll the tensor or contract to a density."""
        f = self._f
        m = self.n + 1
        w = self.window
        if terminate:
            e1 = self._e["last_first"] if m == 1 else self._e["last"]
            mid = f["f_last"]
        else:
            e1 = self._e["first"] if m == 1 else self._e["int"]
            mid = f["f_int"]
        tensor = self.tensor
        if m == 1:
            tensor = tensor * f["f0_first"]
            if not terminate:
                self.tensor = tensor     # slice-0 self term now folded in
        if self.dk == 1:
            c = e1 @ tensor
        elif m == 1:
            c = e1 @ tensor if terminate else tensor[None, :] * e1
        elif m <= self.dk - 1:
            # growing phase: append the new slice, keep full history
            c = tensor[None, ...] * e1.reshape((self.m2, self.m2)
                                               + (1,) * (w - 1))
            for j in range(2, m + 1):
                if m - j == 0:
                    mat = (f["f_last_first"] if terminate else f["f_first"])[j]
                else:
                    mat = mid[j]
                c *= mat.reshape((self.m2,) + (1,) * (j - 1) + (self.m2,)
                                 + (1,) * (w - j))
        else:
            # fold the oldest slice together with the longest-range pair
            if m == self.dk:
                fold = (f["f_last_first"] if terminate else f["f_first"])[self.dk]
            else:
                fold = (f["f_last"] if terminate else f["f_int"])[self.dk]
            flat = tensor.reshape(-1, self.m2)
            out = flat @ fold.T
            c = np.moveaxis(out.reshape((self.m2,) * self.dk), -1, 0).copy()
            c *= e1.reshape((self.m2, self.m2) + (1,) * (self.dk - 2))
            for j in range(2, self.dk):
                c *= mid[j].reshape((self.m2,) + (1,) * (j - 1) + (self.m2,)
                                    + (1,) * (self.dk - 1 - j))
        return c

    def step(self) -> np.ndarray:
        """Advance one slice; return the reduced density at the new time."""
        terminated = self._advance(terminate=True)
        if terminated.ndim > 1:
            terminated = terminated.sum(axis=tuple(range(1, terminated.ndim)))
        self.tensor = self._advance(terminate=False)
        self.n += 1
        return terminated.reshape(self.m, self.m)

    def initial_density(self) -> np.ndarray:
        return np.asarray(self.model.rho0, dtype=complex)


@dataclass
class PropagationResult:
    times: np.ndarray
    rhos: np.ndarray
    populations: np.ndarray
    trace_error: float
    hermiticity_error: float
    min_eigenvalue: float
    imag_residue: float
    pre_asymptotic: bool


def propagate(model: SystemModel, table: InfluenceTable, n_steps: int,
              max_entries: int = DEFAULT_TENSOR_CAP) -> PropagationResult:
    """Iterate the augmented tensor and read out every step.

    Returns the reduced density matrices, the observable series, and the
    worst-case trace/hermiticity/positivity diagnostics over the run.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    state = AugmentedState(model, table, max_entries=max_entries)
    rhos = np.empty((n_steps + 1, model.dimension, model.dimension),
                    dtype=complex)
    rhos[0] = model.rho0
    for k in range(1, n_steps + 1):
        rhos[k] = state.step()
    traces = np.einsum("kii->k", rhos)
    herm = np.max(np.abs(rhos - np.conj(np.swapaxes(rhos, 1, 2))))
    min_eig = min(float(np.linalg.eigvalsh(0.5 * (r + r.conj().T))[0])
                  for r in rhos)
    populations, residue = observable_series(model, rhos)
    return PropagationResult(
        times=table.dt * np.arange(n_steps + 1),
        rhos=rhos,
        populations=populations,
        trace_error=float(np.max(np.abs(traces - 1.0))),
        hermiticity_error=float(herm),
        min_eigenvalue=min_eig,
        imag_residue=residue,
        pre_asymptotic=n_steps < table.dk_max,
    )


@dataclass
class ConvergenceReport:
    """Pairwise sup-norm gaps along a refinement axis."""

    axis: str
    values: list
    gaps: list                  # gaps[i] compares values[i] and values[i+1]
    tolerance: float
    converged_at: object        # smallest axis value meeting the tolerance

    def rows(self):
        out = []
        for (a, b), g in zip(zip(self.values[:-1], self.values[1:]), self.gaps):
            out.append((a, b, g, g <= self.tolerance))
        return out


def convergence_report(series_by_dkmax: dict, tolerance: float = 0.02,
                       axis: str = "dk_max") -> ConvergenceReport:
    """Sup-norm gaps between successive series of a refinement scan.

    A value counts as converged only when every later gap in the scanned
    range also stays within tolerance: memory-truncation errors approach
    zero non-monotonically, so a single small gap can be a false plateau.
    """
    if len(series_by_dkmax) < 2:
        raise ValueError("need at least two series to compare")
    keys = sorted(series_by_dkmax)
    arrays = [np.asarray(series_by_dkmax[k], dtype=float) for k in keys]
    length = arrays[0].size
    if any(a.size != length for a in arrays):
        raise ValueError("mismatched time grids across series")
    gaps = [float(np.max(np.abs(b - a)))
            for a, b in zip(arrays[:-1], arrays[1:])]
    converged_at = None
    for k, g in zip(keys[:-1], gaps):
        if converged_at is None and g <= tolerance:
            converged_at = k
        elif g > tolerance:
            converged_at = None
    return ConvergenceReport(axis=axis, values=keys, gaps=gaps,
                             tolerance=tolerance, converged_at=converged_at)
