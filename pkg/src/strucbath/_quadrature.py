"""Gauss-Legendre panel quadrature helpers.

All frequency integrals in the package run over composite panel grids:
a list of panel edges is refined where the integrand is structured (the
Lorentzian peak, quasi-pole neighbourhoods) and, when the integrand carries
an oscillatory factor cos(omega*t), panels are split so that the phase
advance per panel stays bounded.
"""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gauss_panels(edges, nodes_per_panel: int = 32):
    """Composite Gauss-Legendre rule over consecutive [edges[i], edges[i+1]]."""
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise ValueError("need at least two panel edges")
    if np.any(np.diff(edges) <= 0):
        raise ValueError("panel edges must be strictly increasing")
    x0, w0 = _leggauss(nodes_per_panel)
    a = edges[:-1][:, None]
    b = edges[1:][:, None]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b) + half * x0[None, :]).ravel()
    weights = (half * w0[None, :]).ravel()
    return nodes, weights


def split_edges_for_phase(edges, t_span: float, max_phase: float = 60.0):
    """Subdivide panels so that width * t_span <= max_phase on each panel.

    Keeps oscillatory factors cos(omega*t) with t <= t_span resolvable by a
    fixed-order Gauss rule on every panel.
    """
    edges = np.asarray(edges, dtype=float)
    if t_span <= 0.0:
        return edges
    out = [edges[0]]
    for a, b in zip(edges[:-1], edges[1:]):
        n_sub = max(1, int(np.ceil((b - a) * t_span / max_phase)))
        out.extend(np.linspace(a, b, n_sub + 1)[1:])
    return np.asarray(out)


def geometric_edges(center, inner, outer, factor: float = 2.0):
    """Edges at center +/- inner*factor**k up to +/- outer, plus the center."""
    if not (0 < inner < outer):
        raise ValueError("need 0 < inner < outer")
    offs = [inner]
    while offs[-1] * factor < outer:
        offs.append(offs[-1] * factor)
    offs.append(outer)
    offs = np.asarray(offs)
    return np.concatenate([center - offs[::-1], [center], center + offs])


def merge_edges(*edge_groups, lo=0.0, hi=np.inf, min_rel_gap: float = 1e-12):
    """Union of edge groups clipped to [lo, hi], with near-duplicates dropped."""
    allv = np.concatenate([np.atleast_1d(np.asarray(g, dtype=float))
                           for g in edge_groups])
    allv = allv[(allv >= lo) & (allv <= hi)]
    allv = np.union1d(allv, [lo, hi] if np.isfinite(hi) else [lo])
    allv = np.sort(allv)
    scale = max(abs(allv[0]), abs(allv[-1]), 1e-300)
    keep = np.concatenate([[True], np.diff(allv) > min_rel_gap * scale])
    return allv[keep]


def coth(x):
    """coth(x) for x > 0, stable near zero (series 1/x + x/3)."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    small = x < 1e-4
    out[small] = 1.0 / x[small] + x[small] / 3.0
    out[~small] = 1.0 / np.tanh(x[~small])
    return float(out[0]) if scalar else out
