"""Analytic solver for qubit dynamics in a Lorentzian bath.

The pipeline follows the polaron-style unitary transformation route: a
self-consistent renormalization factor ``eta`` rescales the qubit gap to
``eta*delta``; the transformed coupling is of rotating-wave form, and the
second-order (Born) master equation gives the population difference as a
cosine transform of a spectral function built from a level shift R(w) and a
damping rate gamma(w):

    eta      = exp[ - int_0^inf dw J(w) / (2 (w + eta*delta)^2) ]
    R(w)     = PV int_0^inf dw' (eta*delta)^2 J(w') / ((w'+eta*delta)^2 (w-w'))
    gamma(w) = pi J(w) (eta*delta)^2 / (w + eta*delta)^2
    P(t)     = (1/pi) int_0^inf dw gamma(w) cos(w t)
                                / ((w - eta*delta - R(w))^2 + gamma(w)^2)

All quantities assume zero temperature and an unbiased qubit prepared in the
upper sigma_z eigenstate.
"""

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._quadrature import (gauss_panels, geometric_edges, merge_edges,
                          split_edges_for_phase)
from .errors import NumericsError
from .spectral import (LORENTZIAN, SpectralDensity, cutoff_frequency,
                       evaluate_j, frequency_grid)

_PROBE_CHUNK = 2048


def peak_damping_estimate(g0: float, gamma_damp: float, delta: float) -> float:
    """Damping rate of the near-resonant peaks, up to a constant factor.

    Returns g0^2 * Gamma / (g0^2 + (pi*Gamma*delta)^2).  Linear in Gamma while
    pi*Gamma*delta << g0, falling as 1/Gamma in the opposite regime, with the
    crossover maximum exactly at pi*Gamma*delta = g0.
    """
    return g0**2 * gamma_damp / (g0**2 + (math.pi * gamma_damp * delta) ** 2)


@dataclass
class TrwaSolution:
    """Solved renormalization plus tabulated spectral data.

    The frequency tables live on the master quadrature grid used for the
    principal-value integrals; ``population`` evaluates the cosine transform
    on a peak-refined grid built lazily for the requested time horizon.
    """

    delta: float
    density: SpectralDensity
    eta: float
    freq: np.ndarray
    r_table: np.ndarray
    gamma_table: np.ndarray
    quasi_poles: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    _weights: np.ndarray = field(default=None, repr=False)
    _f_table: np.ndarray = field(default=None, repr=False)
    _pop_cache: dict = field(default_factory=dict, repr=False)
    _pop_lock: threading.Lock = field(default_factory=threading.Lock,
                                      repr=False)
    pop_tol: float = 1e-4

    # -- closed-form pieces --------------------------------------------

    def _f(self, omega):
        """Coupling-weight density (eta*delta)^2 J(w)/(w+eta*delta)^2."""
        ed = self.eta * self.delta
        w = np.asarray(omega, dtype=float)
        return evaluate_j(self.density, w) * ed**2 / (w + ed) ** 2

    def damping(self, omega):
        """gamma(w) >= 0."""
        val = math.pi * self._f(omega)
        return val if np.ndim(omega) else float(val)

    # -- principal value level shift -----------------------------------

    def level_shift(self, omega):
        """R(w) by singularity subtraction on the master grid."""
        if self.density.is_zero:
            return np.zeros_like(np.asarray(omega, dtype=float)) \
                if np.ndim(omega) else 0.0
        w = np.atleast_1d(np.asarray(omega, dtype=float))
        if np.any(w < 0):
            raise ValueError("omega must be non-negative")
        out = np.empty_like(w)
        for lo in range(0, w.size, _PROBE_CHUNK):
            out[lo:lo + _PROBE_CHUNK] = self._level_shift_chunk(w[lo:lo + _PROBE_CHUNK])
        return out if np.ndim(omega) else float(out[0])

    def _level_shift_chunk(self, w):
        wmax = cutoff_frequency(self.density)
        x, wt, f = self.freq, self._weights, self._f_table
        fw = self._f(w)
        d = w[:, None] - x[None, :]
        # probes are kept off the master nodes; see _shift_off_nodes
        diff = (f[None, :] - fw[:, None]) / d
        body = diff @ wt
        log_term = np.where(w > 0, fw * np.log(np.maximum(w, 1e-300)
                                               / (wmax - w)), 0.0)
        ed = self.eta * self.delta
        lead = 2.0 * self.density.scale * self.density.alpha \
            * self.density.omega0**4 * ed**2
        tail = -lead / (5.0 * wmax**5)
        return body + log_term + tail

    def _level_shift_direct(self, w):
        # valid far above the master grid where the kernel is non-singular
        x, wt, f = self.freq, self._weights, self._f_table
        return (f[None, :] / (np.atleast_1d(w)[:, None] - x[None, :])) @ wt

    def _shift_off_nodes(self, w):
        w = np.array(w, dtype=float, copy=True)
        idx = np.searchsorted(self.freq, w)
        idx = np.clip(idx, 1, self.freq.size - 1)
        near = np.minimum(np.abs(w - self.freq[idx - 1]),
                          np.abs(w - self.freq[idx]))
        bump = near < 1e-12 * (1.0 + np.abs(w))
        w[bump] += 3e-12 * (1.0 + np.abs(w[bump]))
        return w

    def spectral_function(self, omega):
        """(1/pi) gamma / ((w - eta*delta - R)^2 + gamma^2)."""
        w = self._shift_off_nodes(np.atleast_1d(np.asarray(omega, dtype=float)))
        g = math.pi * self._f(w)
        r = self.level_shift(w)
        den = (w - self.eta * self.delta - r) ** 2 + g**2
        s = g / den / math.pi
        return s if np.ndim(omega) else float(s[0])

    # -- population difference ------------------------------------------

    def population(self, t):
        """P(t) for scalar or array t >= 0."""
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        out = self.population_grid(tt)
        return out if np.ndim(t) else float(out[0])

    def population_grid(self, times):
        times = np.asarray(times, dtype=float)
        if np.any(times < 0):
            raise ValueError("t must be non-negative")
        if self.density.is_zero:
            return np.cos(self.eta * self.delta * times)
        t_max = float(times.max()) if times.size else 0.0
        nodes, ws = self._population_rule(t_max)
        out = np.empty(times.size, dtype=float)
        for lo in range(0, times.size, 512):
            phase = nodes[None, :] * times[lo:lo + 512, None]
            out[lo:lo + 512] = np.cos(phase) @ ws
        return out

    def _population_rule(self, t_max):
        # population() is advertised as safe for concurrent evaluation, so
        # cache (re)builds are serialized
        with self._pop_lock:
            for cached_tmax, rule in self._pop_cache.items():
                if cached_tmax >= t_max:
                    return rule
            rule = self._build_population_rule(t_max, nodes_per_panel=24)
            check = self._build_population_rule(t_max, nodes_per_panel=40)
            probe = np.linspace(0.0, max(t_max, 1.0 / self.delta), 13)
            p_a = np.array([np.cos(rule[0] * t) @ rule[1] for t in probe])
            p_b = np.array([np.cos(check[0] * t) @ check[1] for t in probe])
            err = float(np.max(np.abs(p_a - p_b)))
            self.diagnostics["population_quad_error"] = err
            if err > self.pop_tol:
                raise NumericsError(
                    f"population quadrature error estimate {err:.3e} exceeds "
                    f"{self.pop_tol:.1e}")
            self._pop_cache.clear()
            self._pop_cache[t_max] = check
            return check

    def _build_population_rule(self, t_max, nodes_per_panel):
        d = self.density
        w0, gd = d.omega0, d.gamma_damp
        wmax = 10.0 * max(self.delta, w0)
        groups = [np.array([0.0, wmax]),
                  max(self.delta, w0) * np.array([0.25, 0.5, 0.75, 1.0,
                                                  1.5, 2.0, 3.0, 5.0, 7.5]),
                  self.eta * self.delta * np.array([0.5, 1.0, 2.0])]
        width = min(math.pi * gd * w0, w0 / 8.0)
        groups.append(geometric_edges(w0, width / 8.0, 8.0 * width))
        for root in self.quasi_poles:
            # refine from deep inside the peak out to the backbone scale:
            # the Lorentzian tails ~ gamma/(w-root)^2 stay relevant far out
            g = max(float(self.damping(root)), 1e-9 * w0)
            groups.append(geometric_edges(root, g / 4.0, wmax / 4.0))
        edges = merge_edges(*groups, lo=0.0, hi=wmax)
        edges = split_edges_for_phase(edges, t_max, max_phase=50.0)
        nodes, wts = gauss_panels(edges, nodes_per_panel)
        nodes = self._shift_off_nodes(nodes)
        s = self.spectral_function(nodes)
        return nodes, wts * s


def _fixed_point_eta(density, delta, x, wt, tol, max_iter, relax):
    jw = evaluate_j(density, x)

    def exponent(eta):
        return float(np.dot(wt, jw / (2.0 * (x + eta * delta) ** 2)))

    eta = 1.0
    residual = math.inf
    for _ in range(max_iter):
        target = math.exp(-exponent(eta))
        residual = abs(eta - target)
        if residual <= tol:
            return eta, residual
        eta = (1.0 - relax) * eta + relax * target
    raise NumericsError(
        f"eta fixed point not converged after {max_iter} iterations; "
        f"last residual {residual:.3e}")


def solve_eta(density: SpectralDensity, delta: float, tol: float = 1e-10,
              max_iter: int = 500, relax: float = 0.5) -> float:
    """Self-consistent renormalization factor in (0, 1]."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if density.kind != LORENTZIAN:
        raise ValueError("the analytic solver requires a Lorentzian density")
    if density.is_zero:
        return 1.0
    x, wt = frequency_grid(density, nodes_per_panel=48)
    return _fixed_point_eta(density, delta, x, wt, tol, max_iter, relax)[0]


def solve_trwa(density: SpectralDensity, delta: float, eta_tol: float = 1e-10,
               pop_tol: float = 1e-4, scan_points: int = 10_000) -> TrwaSolution:
    """Solve the full analytic pipeline for one bath and qubit gap."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if density.kind != LORENTZIAN:
        raise ValueError("the analytic solver requires a Lorentzian density")
    if density.quapi_scaled:
        raise ValueError("solve_trwa expects the physical (unscaled) density")
    if density.is_zero:
        sol = TrwaSolution(delta=delta, density=density, eta=1.0,
                           freq=np.array([]), r_table=np.array([]),
                           gamma_table=np.array([]),
                           quasi_poles=np.array([delta]), pop_tol=pop_tol)
        sol.diagnostics.update(eta_residual=0.0, population_quad_error=0.0)
        return sol

    x, wt = frequency_grid(density, nodes_per_panel=48)
    eta, residual = _fixed_point_eta(density, delta, x, wt, eta_tol, 500, 0.5)

    sol = TrwaSolution(delta=delta, density=density, eta=eta, freq=x,
                       r_table=None, gamma_table=None, quasi_poles=None,
                       pop_tol=pop_tol)
    sol._weights = wt
    sol._f_table = sol._f(x)
    sol.diagnostics["eta_residual"] = residual

    sol.quasi_poles = _find_quasi_poles(sol, scan_points)
    sol.r_table = sol.level_shift(sol._shift_off_nodes(x))
    sol.gamma_table = math.pi * sol._f_table
    return sol


def _find_quasi_poles(sol, scan_points):
    hi = 5.0 * max(sol.density.omega0, sol.delta)
    grid = np.linspace(hi / scan_points, hi, scan_points)
    grid = sol._shift_off_nodes(grid)
    dvals = grid - sol.eta * sol.delta - sol.level_shift(grid)

    def dfun(w):
        w = sol._shift_off_nodes(np.array([w]))
        return float(w[0] - sol.eta * sol.delta - sol.level_shift(w)[0])

    roots = []
    flips = np.nonzero(np.sign(dvals[:-1]) * np.sign(dvals[1:]) < 0)[0]
    for i in flips:
        roots.append(brentq(dfun, grid[i], grid[i + 1], xtol=1e-14))
    roots = np.array(sorted(roots))
    if roots.size == 0:
        raise NumericsError(
            f"no quasi-pole bracketed in (0, {hi:g}); "
            "the spectral function has no resolvable peak")
    keep = np.concatenate([[True], np.diff(roots) > 1e-10 * hi])
    return roots[keep]
