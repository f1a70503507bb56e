"""Assembled multi-bubble energies and their small-parameter expansion.

A bubble is the profile pair concentrated at scale delta and grafted onto
the manifold at a peak xi through a cutoff at geodesic radius r0:

    W = chi(d) delta^{-N/(q+1)} U(d/delta),
    H = chi(d) delta^{-N/(p+1)} V(d/delta),        d = d_g(., xi),

with chi a quintic smoothstep equal to 1 up to r0/2 and 0 beyond r0.  For
disjoint supports the energy

    J_eps = int grad W . grad H + int h W H
            - 1/(p+1-alpha eps) int |H|^{p+1-alpha eps}
            - 1/(q+1-beta eps)  int |W|^{q+1-beta eps}

splits into per-peak radial integrals, computed here exactly (the model
manifolds have radial volume densities and no angular truncation is made).
Sweeping eps with delta_j = sqrt(eps t_j) and fitting J against
(1, eps, eps log eps) exposes the expansion coefficients that the reduced
energy predicts.  The kernel check verifies, by discrete differentiation of
the stored profile samples, that the dilation and translation pairs
annihilate the linearised system, and that a random smooth pair does not.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .constants import unit_sphere_area
from .ground_state import GroundState
from .manifolds import ModelManifold, PeakConfiguration
from .numerics import (IllConditionedFit, derivative_on_grid,
                       expansion_design_fit, geometric_edges,
                       panel_quadrature, smoothstep, smoothstep_derivative)
from .reduction import ConstantPotential, PotentialSpec, RadialPotential


class ChartViolation(ValueError):
    """Cutoff radius does not fit inside the normal chart."""


class OverlappingSupports(ValueError):
    """Two bubbles' supports intersect, the energy does not decouple."""


class PotentialNotRadial(ValueError):
    """The potential is not exactly radial about a bubble peak."""


# -- cutoff -------------------------------------------------------------------

def cutoff(r, r0: float) -> np.ndarray:
    """1 on [0, r0/2], quintic smoothstep down to 0 at r0."""
    r = np.asarray(r, dtype=float)
    return smoothstep((r0 - r) / (0.5 * r0))


def cutoff_derivative(r, r0: float) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return smoothstep_derivative((r0 - r) / (0.5 * r0)) * (-2.0 / r0)


# -- bubbles ------------------------------------------------------------------

@dataclass(frozen=True)
class Bubble:
    """One cutoff bubble pair on a manifold."""

    gs: GroundState
    manifold: ModelManifold
    peak: np.ndarray
    delta: float
    r0: float

    def w_of(self, r) -> np.ndarray:
        """Radial profile of the first component about the peak."""
        amp = self.delta ** (-self.gs.N / (self.gs.q + 1.0))
        return cutoff(r, self.r0) * amp * self.gs.u_of(np.asarray(r) / self.delta)

    def h_of(self, r) -> np.ndarray:
        amp = self.delta ** (-self.gs.N / (self.gs.p + 1.0))
        return cutoff(r, self.r0) * amp * self.gs.v_of(np.asarray(r) / self.delta)

    def dw_of(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        amp = self.delta ** (-self.gs.N / (self.gs.q + 1.0))
        return (cutoff_derivative(r, self.r0) * amp * self.gs.u_of(r / self.delta)
                + cutoff(r, self.r0) * amp / self.delta * self.gs.du_of(r / self.delta))

    def dh_of(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        amp = self.delta ** (-self.gs.N / (self.gs.p + 1.0))
        return (cutoff_derivative(r, self.r0) * amp * self.gs.v_of(r / self.delta)
                + cutoff(r, self.r0) * amp / self.delta * self.gs.dv_of(r / self.delta))


def assemble_bubble(gs: GroundState, manifold: ModelManifold,
                    peak: np.ndarray, delta: float, r0: float) -> Bubble:
    """Validated bubble: the cutoff ball must sit inside the normal chart."""
    if delta <= 0.0:
        raise ValueError("concentration scale must be positive")
    if r0 <= 0.0 or r0 >= manifold.injectivity_radius:
        raise ChartViolation(
            "cutoff radius %.6g outside (0, injectivity radius %.6g)"
            % (r0, manifold.injectivity_radius))
    return Bubble(gs=gs, manifold=manifold, peak=np.asarray(peak, dtype=float),
                  delta=float(delta), r0=float(r0))


# -- radial reduction of the potential ---------------------------------------

def _radial_potential_profile(potential: PotentialSpec,
                              manifold: ModelManifold, center: np.ndarray,
                              radius: float) -> Callable[[np.ndarray], np.ndarray]:
    """Exact radial profile r -> h at distance r from center, when the
    potential is radial about the center within the given radius."""
    if isinstance(potential, ConstantPotential):
        val = float(potential.value)
        return lambda r: np.full_like(np.asarray(r, dtype=float), val)
    if isinstance(potential, RadialPotential):
        dists = [manifold.geodesic_distance(center, a) for a in potential.anchors]
        on_anchor = [i for i, d in enumerate(dists) if d <= 1e-12]
        if len(on_anchor) != 1:
            raise PotentialNotRadial(
                "peak must coincide with exactly one anchor")
        support = potential.support_radius
        others = [d for i, d in enumerate(dists) if i not in on_anchor]
        if others:
            if support is None:
                raise PotentialNotRadial(
                    "multi-anchor radial potential needs a support radius")
            if min(others) < radius + support:
                raise PotentialNotRadial(
                    "another anchor's bump reaches into this bubble")
        g = potential.profile
        off = potential.offset

        def prof(r):
            r = np.asarray(r, dtype=float)
            return off + np.vectorize(g)(r)

        return prof
    raise PotentialNotRadial(
        "potential %r is not radial about a bubble peak" % type(potential).__name__)


# -- energy -------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyBreakdown:
    """The four energy terms; the total is their exact signed sum."""

    grad_term: float
    h_term: float
    p_term: float
    q_term: float
    eps: float
    deltas: Tuple[float, ...]

    @property
    def total(self) -> float:
        return self.grad_term + self.h_term - self.p_term - self.q_term


def energy_terms(gs: GroundState, manifold: ModelManifold,
                 potential: PotentialSpec, peaks: Sequence[np.ndarray],
                 deltas: Sequence[float], r0: float, eps: float = 0.0,
                 alpha: float = 1.0, beta: float = 1.0,
                 panels_per_decade: int = 10, nodes: int = 16
                 ) -> EnergyBreakdown:
    """Energy of a multi-bubble pair with disjoint supports.

    Each term reduces to per-peak radial quadrature against the manifold's
    volume density; supports must be pairwise disjoint for this to be the
    exact energy (OverlappingSupports otherwise).
    """
    peaks = [np.asarray(x, dtype=float) for x in peaks]
    if len(peaks) != len(deltas):
        raise ValueError("need one scale per peak")
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    config = PeakConfiguration(manifold, peaks)
    if config.k >= 2 and config.min_separation() < 2.0 * r0 - 1e-12:
        raise OverlappingSupports(
            "peak separation %.6g below twice the cutoff radius %.6g"
            % (config.min_separation(), 2.0 * r0))
    N = gs.N
    p_exp = gs.p + 1.0 - alpha * eps
    q_exp = gs.q + 1.0 - beta * eps
    if p_exp <= 1.0 or q_exp <= 1.0:
        raise ValueError("perturbed exponents left the admissible range")
    omega = unit_sphere_area(N)
    grad = h_term = p_term = q_term = 0.0
    for peak, delta in zip(peaks, deltas):
        bub = assemble_bubble(gs, manifold, peak, delta, r0)
        dens = lambda r: manifold.volume_density(peak, r)
        w = lambda r: r ** (N - 1.0)
        h_prof = _radial_potential_profile(potential, manifold, peak, r0)
        edges = _bubble_edges(delta, r0, panels_per_decade)
        grad += omega * panel_quadrature(
            lambda r: bub.dw_of(r) * bub.dh_of(r) * dens(r) * w(r), edges, nodes)
        h_term += omega * panel_quadrature(
            lambda r: h_prof(r) * bub.w_of(r) * bub.h_of(r) * dens(r) * w(r),
            edges, nodes)
        p_term += omega / p_exp * panel_quadrature(
            lambda r: bub.h_of(r) ** p_exp * dens(r) * w(r), edges, nodes)
        q_term += omega / q_exp * panel_quadrature(
            lambda r: bub.w_of(r) ** q_exp * dens(r) * w(r), edges, nodes)
    return EnergyBreakdown(grad_term=float(grad), h_term=float(h_term),
                           p_term=float(p_term), q_term=float(q_term),
                           eps=float(eps),
                           deltas=tuple(float(d) for d in deltas))


def _bubble_edges(delta: float, r0: float, per_decade: int) -> np.ndarray:
    """Panels resolving the concentration core, the mid range and the cutoff
    band; the smoothstep kink at r0/2 is a panel edge."""
    inner = geometric_edges(0.02 * delta, 0.5 * r0, per_decade)
    band = np.linspace(0.5 * r0, r0, 9)
    return np.concatenate([[0.0], inner, band[1:]])


# -- sweep and fit -------------------------------------------------------------

@dataclass(frozen=True)
class ExpansionFit:
    """Fit of J(eps) = a + b eps + c eps log eps over a decreasing grid."""

    eps: Tuple[float, ...]
    values: Tuple[float, ...]
    a: float
    b: float
    c: float
    condition_number: float
    max_fit_residual: float
    breakdowns: Tuple[EnergyBreakdown, ...]

    def model(self, eps) -> np.ndarray:
        eps = np.asarray(eps, dtype=float)
        return self.a + self.b * eps + self.c * eps * np.log(eps)

    @property
    def monotone_threshold(self) -> float:
        """Largest eps below which the fitted model is monotone in eps."""
        if self.c == 0.0:
            return float(self.eps[0])
        crit = math.exp(-(self.b / self.c + 1.0))
        return float(min(crit, self.eps[0]))


def validate_eps_grid(eps_grid: Sequence[float]) -> np.ndarray:
    eps = np.asarray(list(eps_grid), dtype=float)
    if eps.size < 6:
        raise ValueError("need at least 6 eps points, got %d" % eps.size)
    if np.any(np.diff(eps) >= 0):
        raise ValueError("eps grid must be strictly decreasing")
    if np.any(eps <= 0):
        raise ValueError("eps must be positive")
    if eps[0] / eps[-1] < 100.0:
        raise ValueError("eps grid must span at least two decades")
    return eps


def default_eps_grid(n: int = 8, lo: float = 1e-8, hi: float = 1e-5
                     ) -> Tuple[float, ...]:
    """Grid low enough that the neglected eps^2 log^2(eps) terms stay well
    below the fitted eps and eps log(eps) contributions; quadrature headroom
    (~1e-10 relative) still leaves several orders of margin at the bottom."""
    return tuple(np.geomspace(hi, lo, n))


def sweep_and_fit(gs: GroundState, manifold: ModelManifold,
                  potential: PotentialSpec, peaks: Sequence[np.ndarray],
                  ts: Sequence[float], eps_grid: Sequence[float],
                  r0: float, alpha: float = 1.0, beta: float = 1.0,
                  panels_per_decade: int = 10, nodes: int = 16) -> ExpansionFit:
    """Evaluate J over the eps grid with delta_j = sqrt(eps t_j) and fit the
    three-term expansion model.  Each eps point is evaluated independently
    and reduced in grid order, so reruns are deterministic."""
    eps = validate_eps_grid(eps_grid)
    ts = [float(t) for t in ts]
    if any(t <= 0 for t in ts):
        raise ValueError("scales t must be positive")
    breakdowns: List[EnergyBreakdown] = []
    for e in eps:
        deltas = [math.sqrt(e * t) for t in ts]
        breakdowns.append(energy_terms(gs, manifold, potential, peaks, deltas,
                                       r0, eps=float(e), alpha=alpha, beta=beta,
                                       panels_per_decade=panels_per_decade,
                                       nodes=nodes))
    values = np.array([b.total for b in breakdowns])
    coef, cond, resid = expansion_design_fit(eps, values)
    return ExpansionFit(eps=tuple(float(e) for e in eps),
                        values=tuple(float(v) for v in values),
                        a=float(coef[0]), b=float(coef[1]), c=float(coef[2]),
                        condition_number=cond,
                        max_fit_residual=float(np.max(np.abs(resid))),
                        breakdowns=tuple(breakdowns))


def plot_fit(fit: ExpansionFit, path: str) -> None:
    """Scalable-vector-graphics plot of J - a against eps with the fit."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "bubblelab"
    eps = np.asarray(fit.eps)
    vals = np.asarray(fit.values) - fit.a
    grid = np.geomspace(eps.min(), eps.max(), 200)
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(grid, fit.model(grid) - fit.a, "-", lw=1.0, label="fitted model")
    ax.plot(eps, vals, "o", ms=4, label="measured")
    ax.set_xscale("log")
    ax.set_xlabel("eps")
    ax.set_ylabel("J - a")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# -- kernel check ---------------------------------------------------------------

@dataclass(frozen=True)
class KernelResidualReport:
    mode: str
    max_relative_residual: float
    control_residual: float
    window: Tuple[float, float]
    n_points: int


def _mode_pair(gs: GroundState, mode: str) -> Tuple[np.ndarray, np.ndarray]:
    if mode == "dilation":
        psi = gs.r * gs.du + gs.N / (gs.q + 1.0) * gs.u
        phi = gs.r * gs.dv + gs.N / (gs.p + 1.0) * gs.v
    elif mode == "translation":
        psi = gs.du.copy()
        phi = gs.dv.copy()
    else:
        raise ValueError("mode must be 'dilation' or 'translation'")
    return psi, phi


def _linearised_residual(gs: GroundState, psi: np.ndarray, phi: np.ndarray,
                         mode: str, window: Tuple[float, float]
                         ) -> Tuple[float, int]:
    mask = (gs.r > 0) & (gs.r <= window[1]) & (gs.r >= window[0])
    r = gs.r[mask]
    n = int(r.size)
    N = gs.N
    # all derivatives from the samples; nothing reuses the equations
    sel = np.flatnonzero(mask)
    lo, hi = sel[0], sel[-1] + 1
    rfull = gs.r[gs.r > 0]
    off = lo - (gs.r.size - rfull.size)
    dpsi = derivative_on_grid(rfull, psi[gs.r > 0], 1)[off:off + n]
    ddpsi = derivative_on_grid(rfull, psi[gs.r > 0], 2)[off:off + n]
    dphi = derivative_on_grid(rfull, phi[gs.r > 0], 1)[off:off + n]
    ddphi = derivative_on_grid(rfull, phi[gs.r > 0], 2)[off:off + n]
    u = gs.u[mask]
    v = gs.v[mask]
    psi_w = psi[mask]
    phi_w = phi[mask]
    mode1 = 1.0 if mode == "translation" else 0.0
    res1 = ddpsi + (N - 1.0) / r * dpsi - mode1 * (N - 1.0) / r ** 2 * psi_w \
        + gs.p * v ** (gs.p - 1.0) * phi_w
    den1 = (np.abs(ddpsi) + np.abs((N - 1.0) / r * dpsi)
            + mode1 * np.abs((N - 1.0) / r ** 2 * psi_w)
            + np.abs(gs.p * v ** (gs.p - 1.0) * phi_w))
    res2 = ddphi + (N - 1.0) / r * dphi - mode1 * (N - 1.0) / r ** 2 * phi_w \
        + gs.q * u ** (gs.q - 1.0) * psi_w
    den2 = (np.abs(ddphi) + np.abs((N - 1.0) / r * dphi)
            + mode1 * np.abs((N - 1.0) / r ** 2 * phi_w)
            + np.abs(gs.q * u ** (gs.q - 1.0) * psi_w))
    # floor the pointwise scale so regions where every term underflows to
    # zero (possible for an arbitrary control pair) score 0/floor, not 0/0
    den1 = den1 + 1e-9 * np.max(den1)
    den2 = den2 + 1e-9 * np.max(den2)
    rel = max(float(np.max(np.abs(res1) / den1)),
              float(np.max(np.abs(res2) / den2)))
    return rel, n


def kernel_residual(gs: GroundState, mode: str,
                    window: Optional[Tuple[float, float]] = None,
                    control_seed: int = 12345) -> KernelResidualReport:
    """Discrete check that the dilation or translation pair annihilates the
    linearised system, with a seeded random smooth pair as negative control.

    The default window starts away from the origin: on the fine end of the
    geometric grid the spacing is ~r/170, so a second difference amplifies
    roundoff by eps/h^2 and the discrete residual there measures the grid,
    not the pair.
    """
    if window is None:
        window = (0.02 * gs.normalization.scale, 0.8 * gs.r_max)
    psi, phi = _mode_pair(gs, mode)
    rel, n = _linearised_residual(gs, psi, phi, mode, window)
    rng = np.random.default_rng(control_seed)
    amp = rng.uniform(0.5, 2.0, size=(2, 3)) * rng.choice([-1.0, 1.0], size=(2, 3))
    widths = rng.uniform(1.0, 20.0, size=(2, 3))
    r = gs.r
    psi_c = sum(a * np.exp(-(r / w) ** 2) for a, w in zip(amp[0], widths[0]))
    phi_c = sum(a * np.exp(-(r / w) ** 2) for a, w in zip(amp[1], widths[1]))
    control, _ = _linearised_residual(gs, psi_c, phi_c, mode, window)
    return KernelResidualReport(mode=mode, max_relative_residual=rel,
                                control_residual=control,
                                window=(float(window[0]), float(window[1])),
                                n_points=n)
