"""Integral constants of the matched profile pair.

All constants are full-space integrals of radial quantities, reduced to
weighted one-dimensional integrals through the area of the unit sphere.
With (U, V) the profile pair and ' the radial derivative:

    l1_gradient = int grad U . grad V     l2 = int |z|^2 grad U . grad V
    l1_v        = int V^{p+1}             l4 = int |z|^2 V^{p+1}
    l1_u        = int U^{q+1}             l5 = int |z|^2 U^{q+1}
    l3          = int U V
    l6          = int V^{p+1} log V       l7 = int U^{q+1} log U

The three l1 forms agree by integration by parts against either equation;
they are computed independently and all reported.  Each integral is a panel
Gauss-Legendre quadrature on [0, r_max] against the stored profile plus a
closed-form tail over [r_max, inf) evaluated on the far-field power
expansion, so no integral is silently truncated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .ground_state import GroundState
from .numerics import geometric_edges, panel_quadrature, power_tail_integral


class DivergentTail(ArithmeticError):
    """A constant's tail integrand does not decay fast enough to integrate."""


def unit_sphere_area(N: int) -> float:
    """Area of the unit sphere in R^N: 2 pi^{N/2} / Gamma(N/2)."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


@dataclass(frozen=True)
class BubbleConstants:
    """Integral constants of one profile pair, in one fixed normalisation."""

    l1: float
    l2: float
    l3: float
    l4: float
    l5: float
    l6: float
    l7: float
    l1_gradient: float
    l1_v: float
    l1_u: float
    omega: float
    p: float
    q: float
    N: int
    normalization: Tuple[float, float, float]
    errors: Dict[str, float]

    @property
    def l1_pairwise_spread(self) -> float:
        """Largest pairwise relative disagreement of the three l1 forms."""
        vals = (self.l1_gradient, self.l1_v, self.l1_u)
        ref = max(abs(v) for v in vals)
        return float(max(abs(a - b) for a in vals for b in vals) / ref)


# -- power-series algebra on tails ------------------------------------------
# a term is (amplitude, s, log_flag) standing for amplitude * r^{-s} * log r

Term = Tuple[float, float, bool]


def _plain(terms: Sequence[Tuple[float, float]]) -> List[Term]:
    return [(a, s, False) for a, s in terms]


def _derivative_series(terms: Sequence[Tuple[float, float]]) -> List[Term]:
    return [(-a * s, s + 1.0, False) for a, s in terms]


def _product(a: Sequence[Term], b: Sequence[Term]) -> List[Term]:
    out = []
    for x, s, fx in a:
        for y, t, fy in b:
            if fx and fy:
                continue          # log^2 never arises at this order
            out.append((x * y, s + t, fx or fy))
    return out


def _power_series(terms: Sequence[Tuple[float, float]], expo: float) -> List[Term]:
    """First-order expansion of (sum a_i r^{-s_i})^expo about the slowest
    decaying term."""
    ts = sorted(terms, key=lambda t: t[1])
    a1, s1 = ts[0]
    out = [(np.sign(a1) * abs(a1) ** expo, s1 * expo, False)]
    for ai, si in ts[1:]:
        out.append((expo * np.sign(a1) * abs(a1) ** (expo - 1.0) * ai,
                    s1 * (expo - 1.0) + si, False))
    return out


def _log_series(terms: Sequence[Tuple[float, float]]) -> List[Term]:
    """log(sum a_i r^{-s_i}) to first order in the subleading terms."""
    ts = sorted(terms, key=lambda t: t[1])
    a1, s1 = ts[0]
    out: List[Term] = [(math.log(abs(a1)), 0.0, False), (-s1, 0.0, True)]
    for ai, si in ts[1:]:
        out.append((ai / a1, si - s1, False))
    return out


def _tail_integral(terms: Sequence[Term], weight_exp: float, r0: float,
                   name: str) -> float:
    """omega-free integral over [r0, inf) of sum term * r^weight_exp."""
    total = 0.0
    for amp, s, flag in terms:
        e = weight_exp - s
        if e >= -1.0:
            raise DivergentTail(
                "%s tail integrand behaves like r^%g" % (name, e))
        total += power_tail_integral(amp, e, r0, log_flag=flag)
    return total


# -- main computation --------------------------------------------------------

def compute_constants(gs: GroundState, panels_per_decade: int = 10,
                      nodes: int = 16) -> BubbleConstants:
    """Quadrature of all constants for one ground state."""
    N = gs.N
    p, q = gs.p, gs.q
    omega = unit_sphere_area(N)
    lam = gs.normalization.scale
    edges = np.concatenate([[0.0],
                            geometric_edges(0.02 * lam, gs.r_max,
                                            panels_per_decade)])

    u, v, du, dv = gs.u_of, gs.v_of, gs.du_of, gs.dv_of
    w = lambda r: r ** (N - 1.0)

    integrands = {
        "l1_gradient": lambda r: du(r) * dv(r) * w(r),
        "l1_v": lambda r: v(r) ** (p + 1.0) * w(r),
        "l1_u": lambda r: u(r) ** (q + 1.0) * w(r),
        "l2": lambda r: r * r * du(r) * dv(r) * w(r),
        "l3": lambda r: u(r) * v(r) * w(r),
        "l4": lambda r: r * r * v(r) ** (p + 1.0) * w(r),
        "l5": lambda r: r * r * u(r) ** (q + 1.0) * w(r),
        "l6": lambda r: v(r) ** (p + 1.0) * np.log(v(r)) * w(r),
        "l7": lambda r: u(r) ** (q + 1.0) * np.log(u(r)) * w(r),
    }

    fu = list(gs.far_u_terms)
    fv = list(gs.far_v_terms)
    dfu = _derivative_series(fu)
    dfv = _derivative_series(fv)
    vp1 = _power_series(fv, p + 1.0)
    uq1 = _power_series(fu, q + 1.0)
    tails = {
        "l1_gradient": (_product(dfu, dfv), N - 1.0),
        "l1_v": (vp1, N - 1.0),
        "l1_u": (uq1, N - 1.0),
        "l2": (_product(dfu, dfv), N + 1.0),
        "l3": (_product(_plain(fu), _plain(fv)), N - 1.0),
        "l4": (vp1, N + 1.0),
        "l5": (uq1, N + 1.0),
        "l6": (_product(vp1, _log_series(fv)), N - 1.0),
        "l7": (_product(uq1, _log_series(fu)), N - 1.0),
    }

    values: Dict[str, float] = {}
    errors: Dict[str, float] = {}
    for name, f in integrands.items():
        hi = panel_quadrature(f, edges, nodes)
        lo = panel_quadrature(f, edges, max(nodes // 2, 4))
        tail_terms, wexp = tails[name]
        tail = _tail_integral(tail_terms, wexp, gs.r_max, name)
        values[name] = omega * (hi + tail)
        errors[name] = omega * abs(hi - lo) + abs(omega * tail) * 1e-6

    return BubbleConstants(
        l1=values["l1_gradient"],
        l2=values["l2"], l3=values["l3"], l4=values["l4"], l5=values["l5"],
        l6=values["l6"], l7=values["l7"],
        l1_gradient=values["l1_gradient"],
        l1_v=values["l1_v"], l1_u=values["l1_u"],
        omega=omega, p=p, q=q, N=N,
        normalization=gs.normalization.tag(),
        errors=errors,
    )


def phi_coefficient(c: BubbleConstants, p: float, q: float, N: int) -> float:
    """Coefficient of the scalar curvature in the reduced potential:

        (l2 - l4/(p+1) - l5/(q+1)) / (6 N l3).

    It is invariant under the concentration rescaling of the profile pair.
    """
    _check_pqn(c, p, q, N)
    return (c.l2 - c.l4 / (p + 1.0) - c.l5 / (q + 1.0)) / (6.0 * N * c.l3)


def c1_c2(c: BubbleConstants, alpha: float, beta: float,
          p: float, q: float, k: int) -> Tuple[float, float]:
    """Affine coefficients of the reduced-energy expansion in eps:
    the eps-linear offset c1 and the eps*log(eps) coefficient -c2 for k
    identical bubbles."""
    _check_pqn(c, p, q, c.N)
    if alpha <= 0 or beta <= 0:
        raise ValueError("perturbation rates alpha, beta must be positive")
    if k < 1:
        raise ValueError("need at least one bubble")
    mix = alpha / (p + 1.0) ** 2 + beta / (q + 1.0) ** 2
    c1 = k * ((c.l6 * alpha / (p + 1.0) + c.l7 * beta / (q + 1.0))
              - mix * c.l1)
    c2 = 0.5 * c.N * c.l1 * k * mix
    return float(c1), float(c2)


def log_slope_constant(c: BubbleConstants, alpha: float, beta: float,
                       p: float, q: float) -> float:
    """Coefficient (N l1 / 2)(alpha/(p+1)^2 + beta/(q+1)^2) of -log t in the
    single-bubble reduced energy."""
    c1, c2 = c1_c2(c, alpha, beta, p, q, 1)
    return c2


def _check_pqn(c: BubbleConstants, p: float, q: float, N: int) -> None:
    if abs(p - c.p) > 1e-12 or abs(q - c.q) > 1e-12 or N != c.N:
        raise ValueError(
            "exponents (%r, %r, %r) disagree with the constants' (%r, %r, %r)"
            % (p, q, N, c.p, c.q, c.N))
