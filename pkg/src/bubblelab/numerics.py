"""Shared numerical helpers: finite-difference weights on scattered nodes,
composite Gauss-Legendre quadrature, power-law tail integrals, cutoff
polynomials and small fitting utilities."""
from __future__ import annotations

from typing import Callable, Optional, Tuple

import numpy as np


def fd_weights(x: np.ndarray, x0: float, m: int) -> np.ndarray:
    """Weights w so that sum(w * f(x)) approximates the m-th derivative of f
    at x0, for arbitrary distinct nodes x (Fornberg's recursion)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def derivative_on_grid(r: np.ndarray, f: np.ndarray, order: int,
                       stencil: int = 7) -> np.ndarray:
    """Derivative of sampled values on a nonuniform grid via sliding
    Fornberg stencils.  Stencil width must be odd and > order."""
    r = np.asarray(r, dtype=float)
    f = np.asarray(f, dtype=float)
    n = r.size
    if stencil > n:
        stencil = n if n % 2 == 1 else n - 1
    half = stencil // 2
    out = np.empty(n)
    for i in range(n):
        lo = min(max(i - half, 0), n - stencil)
        idx = slice(lo, lo + stencil)
        w = fd_weights(r[idx], r[i], order)
        out[i] = w @ f[idx]
    return out


_GL_CACHE: dict = {}


def _gl_nodes(n: int) -> Tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def panel_quadrature(f: Callable[[np.ndarray], np.ndarray],
                     edges: np.ndarray, nodes: int = 16) -> float:
    """Integrate f over [edges[0], edges[-1]] with fixed-order Gauss-Legendre
    rules on each panel.  f must accept a vector of abscissae."""
    x, w = _gl_nodes(nodes)
    edges = np.asarray(edges, dtype=float)
    a = edges[:-1]
    h = 0.5 * np.diff(edges)
    mid = a + h
    pts = (mid[:, None] + h[:, None] * x[None, :]).ravel()
    vals = np.asarray(f(pts), dtype=float).reshape(len(h), nodes)
    return float(np.sum(h * (vals @ w)))


def panel_quadrature_error(f: Callable[[np.ndarray], np.ndarray],
                           edges: np.ndarray, nodes: int = 16) -> Tuple[float, float]:
    """Quadrature value together with a crude error estimate obtained by
    comparing against a rule of half the order."""
    hi = panel_quadrature(f, edges, nodes)
    lo = panel_quadrature(f, edges, max(nodes // 2, 2))
    return hi, abs(hi - lo)


def geometric_edges(a: float, b: float, per_decade: int) -> np.ndarray:
    """Panel edges geometrically spaced on [a, b], a > 0."""
    n = max(int(np.ceil(np.log10(b / a) * per_decade)), 1)
    return np.geomspace(a, b, n + 1)


def power_tail_integral(amplitude: float, exponent: float, r0: float,
                        log_flag: bool = False) -> float:
    """Integral over [r0, inf) of amplitude * r^exponent (times log r when
    log_flag).  Requires exponent < -1."""
    if exponent >= -1.0:
        raise ValueError("tail integral diverges: exponent %g" % exponent)
    s = -(exponent + 1.0)
    base = amplitude * r0 ** (exponent + 1.0) / s
    if not log_flag:
        return base
    return base * (np.log(r0) + 1.0 / s)


def smoothstep(u: np.ndarray) -> np.ndarray:
    """Quintic smoothstep: 0 for u<=0, 1 for u>=1, C^2 monotone between."""
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (u * (6.0 * u - 15.0) + 10.0)


def smoothstep_derivative(u: np.ndarray) -> np.ndarray:
    inside = (u > 0.0) & (u < 1.0)
    u = np.clip(u, 0.0, 1.0)
    d = 30.0 * u * u * (u - 1.0) * (u - 1.0)
    return np.where(inside, d, 0.0)


def loglog_slope(r: np.ndarray, f: np.ndarray) -> Tuple[float, float]:
    """Least-squares slope and intercept of log|f| against log r."""
    r = np.asarray(r, dtype=float)
    f = np.asarray(f, dtype=float)
    mask = np.abs(f) > 0
    x = np.log(r[mask])
    y = np.log(np.abs(f[mask]))
    A = np.column_stack([x, np.ones_like(x)])
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(sol[0]), float(sol[1])


class IllConditionedFit(Exception):
    """Raised when a regression design matrix is numerically rank deficient."""


def expansion_design_fit(eps: np.ndarray, values: np.ndarray,
                         cond_limit: float = 1e10
                         ) -> Tuple[np.ndarray, float, np.ndarray]:
    """Ordinary least squares of values against (1, eps, eps*log eps).

    Returns (coefficients, condition number, residuals).  Columns are scaled
    to unit norm before assessing conditioning; raises IllConditionedFit when
    the scaled condition number exceeds cond_limit.
    """
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    A = np.column_stack([np.ones_like(eps), eps, eps * np.log(eps)])
    norms = np.linalg.norm(A, axis=0)
    cond = float(np.linalg.cond(A / norms))
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedFit(
            "design matrix condition number %.3e exceeds %.1e"
            % (cond, cond_limit))
    sol, *_ = np.linalg.lstsq(A / norms, values, rcond=None)
    coef = sol / norms
    resid = values - A @ coef
    return coef, cond, resid
