"""Bath spectral densities, the two-viewpoint coupling map, and the bath
response kernel.

Two bath families are supported (hbar = 1 throughout):

* Lorentzian, peaked at ``omega0``::

      J(w) = 2*alpha*w*omega0**4 / ((omega0**2 - w**2)**2
                                    + (2*pi*gamma_damp*w*omega0)**2)

  For w << omega0 this reduces to the Ohmic form 2*alpha*w.

* Ohmic with exponential cutoff::

      J(w) = gamma_damp * w * exp(-w / omega_c)

Both conventions define J as the coupling-weighted mode density
``J(w) = sum_k g_k^2 delta(w - w_k)``.  The path-integral engine uses the
generic oscillator-bath convention instead, which differs by a factor pi;
:func:`quapi_density_from_physical` performs that rescale exactly once.

The complex bath response kernel is

    alpha(t) = (1/pi) * int_0^inf dw J(w) [coth(beta*w/2) cos(w t) - i sin(w t)]

with coth -> 1 at beta = infinity.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from ._quadrature import (coth, gauss_panels, geometric_edges, merge_edges,
                          split_edges_for_phase)
from .errors import NumericsError

LORENTZIAN = "lorentzian"
OHMIC = "ohmic"


@dataclass(frozen=True)
class SpectralDensity:
    """Tagged description of a bath spectral density.

    ``scale`` multiplies J(w) as a whole; it is 1 for the physical
    conventions above and pi after :func:`quapi_density_from_physical`.
    """

    kind: str
    alpha: float = 0.0
    omega0: float = 1.0
    gamma_damp: float = 0.0
    omega_c: float = 0.0
    scale: float = 1.0
    quapi_scaled: bool = False

    def __post_init__(self):
        if self.kind not in (LORENTZIAN, OHMIC):
            raise ValueError(f"unknown spectral density kind {self.kind!r}")
        if self.gamma_damp <= 0:
            raise ValueError("gamma_damp must be positive")
        if self.kind == LORENTZIAN:
            if self.alpha < 0:
                raise ValueError("alpha must be non-negative")
            if self.omega0 <= 0:
                raise ValueError("omega0 must be positive")
        else:
            if self.omega_c <= 0:
                raise ValueError("omega_c must be positive")

    def __call__(self, omega):
        return evaluate_j(self, omega)

    @property
    def is_zero(self) -> bool:
        return self.kind == LORENTZIAN and self.alpha == 0.0


def lorentzian(alpha: float, omega0: float, gamma_damp: float) -> SpectralDensity:
    return SpectralDensity(LORENTZIAN, alpha=alpha, omega0=omega0,
                           gamma_damp=gamma_damp)


def ohmic(gamma_damp: float, omega_c: float) -> SpectralDensity:
    return SpectralDensity(OHMIC, gamma_damp=gamma_damp, omega_c=omega_c)


def evaluate_j(density: SpectralDensity, omega):
    """J(omega) for omega >= 0; array friendly."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("omega must be non-negative")
    if density.kind == LORENTZIAN:
        a, w0, g = density.alpha, density.omega0, density.gamma_damp
        num = 2.0 * a * w * w0**4
        den = (w0**2 - w**2) ** 2 + (2.0 * math.pi * g * w * w0) ** 2
        val = density.scale * num / den
    else:
        g, wc = density.gamma_damp, density.omega_c
        val = density.scale * g * w * np.exp(-w / wc)
    return val if val.ndim else float(val)


def map_alpha_to_g0(alpha: float, gamma_damp: float, omega0: float) -> float:
    """Qubit-oscillator coupling g0 = omega0 * sqrt(alpha / (8 gamma_damp))."""
    if alpha < 0 or gamma_damp <= 0 or omega0 <= 0:
        raise ValueError("alpha must be >= 0, gamma_damp and omega0 > 0")
    return omega0 * math.sqrt(alpha / (8.0 * gamma_damp))


def map_g0_to_alpha(g0: float, gamma_damp: float, omega0: float) -> float:
    """Inverse map: alpha = 8 gamma_damp g0^2 / omega0^2."""
    if g0 < 0 or gamma_damp <= 0 or omega0 <= 0:
        raise ValueError("g0 must be >= 0, gamma_damp and omega0 > 0")
    return 8.0 * gamma_damp * g0**2 / omega0**2


@dataclass(frozen=True)
class ViewMapping:
    """Exact parameter correspondence between the two viewpoints."""

    g0: float
    alpha: float
    gamma_damp: float
    omega0: float

    @classmethod
    def from_alpha(cls, alpha, gamma_damp, omega0):
        return cls(map_alpha_to_g0(alpha, gamma_damp, omega0),
                   alpha, gamma_damp, omega0)

    @classmethod
    def from_g0(cls, g0, gamma_damp, omega0):
        return cls(g0, map_g0_to_alpha(g0, gamma_damp, omega0),
                   gamma_damp, omega0)


def quapi_density_from_physical(density: SpectralDensity) -> SpectralDensity:
    """Rescale J by pi to match the generic oscillator-bath convention.

    With bath couplings c_j = g_j*sqrt(2 m_j w_j), the generic-form density
    (pi/2)*sum_j c_j^2/(m_j w_j) delta(w - w_j) equals pi*sum_j g_j^2
    delta(w - w_j), i.e. pi times the physical J.  System coordinates are the
    operator eigenvalues chosen in :mod:`strucbath.models` (+-1/2 for the bare
    qubit, eigenvalues of B^dag + B for the composite).
    """
    if density.quapi_scaled:
        raise ValueError("density is already in the generic QUAPI convention")
    return replace(density, scale=density.scale * math.pi, quapi_scaled=True)


# ---------------------------------------------------------------------------
# frequency-panel machinery
# ---------------------------------------------------------------------------

def cutoff_frequency(density: SpectralDensity) -> float:
    """Upper integration limit: max(50*omega0, 5*omega_c) style cutoff."""
    if density.kind == LORENTZIAN:
        return 50.0 * density.omega0
    return 30.0 * density.omega_c


def base_edges(density: SpectralDensity) -> np.ndarray:
    """Panel edges resolving the structure of J."""
    if density.kind == LORENTZIAN:
        w0, g = density.omega0, density.gamma_damp
        width = min(math.pi * g * w0, w0 / 8.0)
        peak = geometric_edges(w0, width / 8.0, 8.0 * width)
        coarse = w0 * np.array([0.0, 0.125, 0.25, 0.5, 0.75, 0.9,
                                1.1, 1.25, 1.5, 2.0, 3.0, 5.0, 8.0,
                                12.0, 20.0, 32.0, 50.0])
        return merge_edges(coarse, peak, lo=0.0, hi=cutoff_frequency(density))
    wc = density.omega_c
    coarse = wc * np.array([0.0, 0.0625, 0.125, 0.25, 0.5, 1.0, 1.5, 2.0,
                            3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 30.0])
    return merge_edges(coarse, lo=0.0, hi=cutoff_frequency(density))


def frequency_grid(density: SpectralDensity, t_span: float = 0.0,
                   nodes_per_panel: int = 32, max_phase: float = 60.0):
    """Panel nodes and weights for integrals of J(w) * (smooth or cos(wt))."""
    edges = base_edges(density)
    edges = split_edges_for_phase(edges, t_span, max_phase)
    return gauss_panels(edges, nodes_per_panel)


def _lorentzian_tail_correction(density: SpectralDensity) -> float:
    # next-order coefficient of J ~ 2 a w0^4 / w^3 * (1 + c2/w^2 + ...)
    return 2.0 * density.omega0**2 - (2.0 * math.pi * density.gamma_damp
                                      * density.omega0) ** 2


def j_integral(density: SpectralDensity) -> float:
    """int_0^inf J(w) dw with an analytic tail estimate beyond the cutoff."""
    if density.is_zero:
        return 0.0
    if density.kind == OHMIC:
        return density.scale * density.gamma_damp * density.omega_c**2
    x, w = frequency_grid(density, nodes_per_panel=48)
    body = float(np.dot(w, evaluate_j(density, x)))
    # J ~ scale*2*alpha*omega0^4/w^3 past the cutoff
    wmax = cutoff_frequency(density)
    lead = density.scale * density.alpha * density.omega0**4
    tail = lead / wmax**2 + lead * _lorentzian_tail_correction(density) / (2.0 * wmax**4)
    return body + tail


def counterterm_mu(density: SpectralDensity) -> float:
    """(1/pi) int_0^inf J(w)/w dw, the local counter-term strength."""
    if density.is_zero:
        return 0.0
    if density.kind == OHMIC:
        return density.scale * density.gamma_damp * density.omega_c / math.pi
    x, w = frequency_grid(density, nodes_per_panel=48)
    body = float(np.dot(w, evaluate_j(density, x) / x))
    wmax = cutoff_frequency(density)
    lead = density.scale * 2.0 * density.alpha * density.omega0**4
    tail = lead / (3.0 * wmax**3) + lead * _lorentzian_tail_correction(density) / (5.0 * wmax**5)
    return (body + tail) / math.pi


# ---------------------------------------------------------------------------
# bath response kernel
# ---------------------------------------------------------------------------

def _thermal_weight(density: SpectralDensity, omega, beta: float):
    jw = evaluate_j(density, omega)
    if math.isinf(beta):
        return jw
    return jw * coth(0.5 * beta * np.asarray(omega, dtype=float))


def response_kernel(density: SpectralDensity, beta: float, t: float,
                    tol: float = 1e-8) -> complex:
    """Reference evaluation of alpha(t) by adaptive weighted quadrature.

    Raises :class:`NumericsError` when the quadrature error estimate exceeds
    ``tol`` (absolute, per part).
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if beta is None or beta <= 0:
        raise ValueError("beta must be positive (math.inf for zero temperature)")
    if density.is_zero:
        return 0.0 + 0.0j
    wmax = cutoff_frequency(density)
    if density.kind == LORENTZIAN:
        w0 = density.omega0
        breaks = [0.0, 0.5 * w0, 1.5 * w0, 5.0 * w0, wmax]
    else:
        wc = density.omega_c
        breaks = [0.0, 5.0 * wc, wmax]
    f = lambda w: _thermal_weight(density, w, beta)
    g = lambda w: evaluate_j(density, w)
    re = im = ere = eim = 0.0
    eps = 0.2 * tol
    for a, b in zip(breaks[:-1], breaks[1:]):
        if t == 0.0:
            v, e = quad(f, a, b, limit=400, epsabs=eps, epsrel=1e-11)
            re, ere = re + v, ere + e
        else:
            v, e = quad(f, a, b, weight="cos", wvar=t, limit=400, epsabs=eps,
                        epsrel=1e-11)
            re, ere = re + v, ere + e
            v, e = quad(g, a, b, weight="sin", wvar=t, limit=400, epsabs=eps,
                        epsrel=1e-11)
            im, eim = im + v, eim + e
    if max(ere, eim) > tol:
        raise NumericsError(
            f"response kernel quadrature error estimate {max(ere, eim):.3e} "
            f"exceeds tolerance {tol:.1e} at t={t}")
    return (re - 1j * im) / math.pi


class ResponseKernel:
    """alpha(t) sampled on a uniform grid with cubic interpolation.

    Samples are produced by one vectorized panel quadrature whose panels are
    split to resolve cos(w t) up to the largest sampled time.  alpha(-t) is
    served through the conjugation alpha(-t) = conj(alpha(t)).
    """

    def __init__(self, density: SpectralDensity, beta: float = math.inf,
                 t_max: float = 20.0, spacing: float | None = None):
        if t_max <= 0:
            raise ValueError("t_max must be positive")
        if beta is None or beta <= 0:
            raise ValueError("beta must be positive (math.inf for zero temperature)")
        self.density = density
        self.beta = float(beta)
        scale = density.omega_c if density.kind == OHMIC else density.omega0
        if spacing is None:
            spacing = min(t_max / 400.0, 0.05 / scale)
        self.spacing = float(spacing)
        self.t_max = float(t_max)
        self.omega_max = cutoff_frequency(density)
        self.times = np.arange(0.0, t_max + spacing, spacing)
        self.samples = self._sample(self.times)
        self._spline = CubicSpline(self.times, self.samples)

    def _sample(self, times):
        if self.density.is_zero:
            return np.zeros(times.size, dtype=complex)
        x, w = frequency_grid(self.density, t_span=float(times[-1]),
                              nodes_per_panel=24, max_phase=40.0)
        therm = w * _thermal_weight(self.density, x, self.beta)
        wj = w * evaluate_j(self.density, x)
        out = np.empty(times.size, dtype=complex)
        for lo in range(0, times.size, 256):
            tt = times[lo:lo + 256, None]
            phase = x[None, :] * tt
            out[lo:lo + 256] = (np.cos(phase) @ therm
                                - 1j * (np.sin(phase) @ wj))
        return out / math.pi

    def at(self, t):
        """Interpolated alpha(t); negative arguments use conjugation."""
        t = np.asarray(t, dtype=float)
        if np.any(np.abs(t) > self.t_max + 1e-12):
            raise ValueError("time outside the sampled range")
        vals = self._spline(np.abs(t))
        vals = np.where(t < 0, np.conj(vals), vals)
        return vals if vals.ndim else complex(vals)

    def decay_time(self, frac: float = 0.05) -> float:
        """Earliest sampled time after which |alpha| stays below frac*|alpha(0)|."""
        mag = np.abs(self.samples)
        thresh = frac * mag[0]
        above = mag >= thresh
        if above.all():
            raise NumericsError(
                f"|alpha(t)| never stays below {frac} * |alpha(0)| "
                f"within t_max={self.t_max}")
        last_above = np.nonzero(above)[0][-1]
        if last_above + 1 >= mag.size:
            raise NumericsError(
                f"|alpha(t)| decay to {frac} * |alpha(0)| not resolved "
                f"within t_max={self.t_max}")
        return float(self.times[last_above + 1])
