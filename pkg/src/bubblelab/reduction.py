"""Reduced energy over peak locations and concentration scales.

After projecting the energy onto the bubble family, what is left to
optimise is

    F(t, xi) = sum_j [ l3 phi(xi_j) t_j - c_log log t_j ],

where phi(xi) = h(xi) - kappa Scal(xi) combines the potential with the
scalar curvature through the coefficient kappa = phi_coefficient, and
c_log = (N l1 / 2)(alpha/(p+1)^2 + beta/(q+1)^2).  For phi(xi) > 0 each
peak has the explicit optimal scale t = c_log / (l3 phi(xi)).  The finder
below locates interior critical points of F by seeded multi-start
quasi-Newton descent in local charts, with re-centring, a separation
penalty, and finite-difference gradient and Hessian diagnostics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .constants import BubbleConstants, log_slope_constant, phi_coefficient
from .manifolds import ModelManifold


class NonpositiveScale(ValueError):
    """A concentration scale t <= 0 was supplied."""


class NonpositivePhi(ValueError):
    """The reduced potential is not positive, no optimal scale exists."""


class NoCriticalPointFound(RuntimeError):
    """Every descent seed was rejected or failed to converge."""


class SeparationUnsatisfiable(RuntimeError):
    """No k-point configuration meets the pairwise separation bound."""


# -- potentials ---------------------------------------------------------------

class PotentialSpec:
    """Potential h on a model manifold; subclasses give the three supported
    forms (constant, radial bumps about anchors, closed form in a chart)."""

    def evaluate(self, manifold: ModelManifold, x: np.ndarray) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantPotential(PotentialSpec):
    value: float

    def evaluate(self, manifold: ModelManifold, x: np.ndarray) -> float:
        return float(self.value)


@dataclass(frozen=True)
class RadialPotential(PotentialSpec):
    """offset + sum of radial profiles g(d(x, anchor)).  support_radius, when
    set, promises g(d) = 0 for d >= support_radius; the energy assembly needs
    it to certify that a bubble sees only its own anchor's bump."""

    anchors: Tuple[np.ndarray, ...]
    profile: Callable[[float], float]
    offset: float = 0.0
    support_radius: Optional[float] = None

    def evaluate(self, manifold: ModelManifold, x: np.ndarray) -> float:
        total = self.offset
        for anchor in self.anchors:
            total += self.profile(manifold.geodesic_distance(anchor, x))
        return float(total)


@dataclass(frozen=True)
class ChartPotential(PotentialSpec):
    """Closed form in the normal-coordinate chart about a fixed anchor."""

    anchor: np.ndarray
    fn: Callable[[np.ndarray], float]

    def evaluate(self, manifold: ModelManifold, x: np.ndarray) -> float:
        return float(self.fn(manifold.to_chart(self.anchor, x)))


# -- reduced potential and scales ---------------------------------------------

def phi(manifold: ModelManifold, potential: PotentialSpec,
        constants: BubbleConstants, x: np.ndarray) -> float:
    """phi(x) = h(x) - phi_coefficient * Scal(x)."""
    kappa = phi_coefficient(constants, constants.p, constants.q, constants.N)
    return potential.evaluate(manifold, x) - kappa * manifold.scal(x)


def optimal_t(phi_value: float, constants: BubbleConstants,
              alpha: float, beta: float) -> float:
    """Unique minimiser of f(t) = l3 phi t - c_log log t over t > 0."""
    if phi_value <= 0.0:
        raise NonpositivePhi("need phi > 0, got %r" % phi_value)
    c_log = log_slope_constant(constants, alpha, beta,
                               constants.p, constants.q)
    return float(c_log / (constants.l3 * phi_value))


def peak_energy(t: float, phi_value: float, constants: BubbleConstants,
                alpha: float, beta: float) -> float:
    """Single-peak reduced energy f(t, xi) = l3 phi(xi) t - c_log log t."""
    if t <= 0.0:
        raise NonpositiveScale("need t > 0, got %r" % t)
    c_log = log_slope_constant(constants, alpha, beta,
                               constants.p, constants.q)
    return float(constants.l3 * phi_value * t - c_log * math.log(t))


def psi_k(manifold: ModelManifold, potential: PotentialSpec,
          constants: BubbleConstants, alpha: float, beta: float,
          ts: Sequence[float], points: Sequence[np.ndarray]) -> float:
    """Reduced energy of a k-peak configuration, sum of peak_energy terms."""
    if len(ts) != len(points):
        raise ValueError("need one scale per peak")
    total = 0.0
    for t, x in zip(ts, points):
        total += peak_energy(t, phi(manifold, potential, constants, x),
                             constants, alpha, beta)
    return float(total)


# -- critical point finder ----------------------------------------------------

@dataclass(frozen=True)
class FinderOptions:
    seeds: int = 64
    rng_seed: int = 0
    t_box: Tuple[float, float] = (1e-3, 1e3)
    min_separation: Optional[float] = None   # default: injectivity radius / 2
    max_rounds: int = 4                      # chart re-centring rounds
    grad_tol: float = 1e-7                   # scaled gradient acceptance
    degeneracy_ratio: float = 1e-6           # |eig| below ratio*max -> flat
    dedupe_value_tol: float = 1e-9
    dedupe_distance_tol: float = 1e-5
    fd_step: float = 1e-5


@dataclass(frozen=True)
class ReducedCriticalPoint:
    ts: Tuple[float, ...]
    points: Tuple[np.ndarray, ...]
    value: float
    grad_norm: float
    hessian_eigenvalues: Tuple[float, ...]
    degenerate: bool
    morse_index: Optional[int]

    @property
    def k(self) -> int:
        return len(self.ts)


def _draw_configuration(manifold: ModelManifold, k: int, min_sep: float,
                        rng: np.random.Generator, tries: int = 200
                        ) -> List[np.ndarray]:
    for _ in range(tries):
        pts = [manifold.random_point(rng) for _ in range(k)]
        ok = all(manifold.geodesic_distance(pts[i], pts[j]) >= min_sep
                 for i in range(k) for j in range(i + 1, k))
        if ok:
            return pts
    raise SeparationUnsatisfiable(
        "could not place %d points with pairwise separation %.4g" % (k, min_sep))


def find_critical_points(manifold: ModelManifold, potential: PotentialSpec,
                         constants: BubbleConstants, alpha: float, beta: float,
                         k: int,
                         options: FinderOptions = FinderOptions()
                         ) -> List[ReducedCriticalPoint]:
    """Multi-start search for interior critical points of the reduced energy.

    Each seed draws a separated random configuration, then runs bounded
    quasi-Newton descent in (t_1..t_k, chart coordinates of each peak),
    re-centring the charts between rounds.  Results hitting the t-box or
    failing the finite-difference gradient test are discarded; survivors are
    deduplicated up to peak permutation and returned sorted by energy.
    """
    if k < 1:
        raise ValueError("need k >= 1 peaks")
    n = manifold.dim
    c_log = log_slope_constant(constants, alpha, beta,
                               constants.p, constants.q)
    min_sep = options.min_separation
    if min_sep is None:
        min_sep = 0.5 * manifold.injectivity_radius
    chart_r = 0.45 * manifold.injectivity_radius
    t_lo, t_hi = options.t_box
    rng = np.random.default_rng(options.rng_seed)
    penalty_scale = 1e6 * abs(c_log) / max(min_sep, 1e-12) ** 2

    def unpack(z: np.ndarray, anchors: List[np.ndarray]
               ) -> Tuple[np.ndarray, List[np.ndarray]]:
        ts = z[:k]
        pts = [manifold.from_chart(anchors[j], z[k + j * n: k + (j + 1) * n])
               for j in range(k)]
        return ts, pts

    def objective(z: np.ndarray, anchors: List[np.ndarray]) -> float:
        ts, pts = unpack(z, anchors)
        total = 0.0
        for t, x in zip(ts, pts):
            ph = phi(manifold, potential, constants, x)
            total += constants.l3 * ph * t - c_log * math.log(t)
        for i in range(k):
            for j in range(i + 1, k):
                d = manifold.geodesic_distance(pts[i], pts[j])
                gap = min_sep - d
                if gap > 0.0:
                    total += penalty_scale * gap * gap
        return total

    bounds = [(t_lo, t_hi)] * k + [(-chart_r, chart_r)] * (k * n)
    found: List[ReducedCriticalPoint] = []

    for _ in range(options.seeds):
        anchors = _draw_configuration(manifold, k, min_sep, rng)
        z = np.concatenate([np.exp(rng.uniform(np.log(max(t_lo, 1e-2)),
                                               np.log(min(t_hi, 1e2)), k)),
                            np.zeros(k * n)])
        ok = True
        for _round in range(options.max_rounds):
            res = minimize(objective, z, args=(anchors,), method="L-BFGS-B",
                           bounds=bounds,
                           options={"maxiter": 400, "ftol": 1e-15,
                                    "gtol": 1e-12})
            z = res.x
            ts, pts = unpack(z, anchors)
            # re-centre the charts on the current peaks
            anchors = pts
            z = np.concatenate([ts, np.zeros(k * n)])
        ts, pts = unpack(z, anchors)
        if np.any(ts <= t_lo * (1 + 1e-6)) or np.any(ts >= t_hi * (1 - 1e-6)):
            ok = False
        seps = [manifold.geodesic_distance(pts[i], pts[j])
                for i in range(k) for j in range(i + 1, k)]
        if seps and min(seps) < min_sep * (1.0 + 1e-9):
            ok = False       # stuck on the separation barrier
        if not ok:
            continue
        scale = max(abs(c_log), 1e-30)
        grad, hess = _fd_derivatives(objective, z, anchors, options.fd_step)
        # Newton polish: the quasi-Newton loop stops on ftol, which on an
        # objective of size c_log leaves a terminal gradient near the
        # acceptance gate; pinv ignores flat directions of the Hessian
        for _polish in range(3):
            grad_norm = float(np.linalg.norm(grad) / scale)
            if grad_norm <= 0.1 * options.grad_tol:
                break
            step = np.linalg.pinv(hess, rcond=1e-8) @ grad
            z_new = np.clip(z - step, [b[0] for b in bounds],
                            [b[1] for b in bounds])
            if objective(z_new, anchors) > objective(z, anchors) + abs(c_log) * 1e-12:
                break
            z = z_new
            grad, hess = _fd_derivatives(objective, z, anchors,
                                         options.fd_step)
        ts, pts = unpack(z, anchors)
        grad_norm = float(np.linalg.norm(grad) / scale)
        if grad_norm > options.grad_tol:
            continue
        eigs = np.linalg.eigvalsh(0.5 * (hess + hess.T))
        emax = float(np.max(np.abs(eigs))) if eigs.size else 0.0
        degenerate = bool(np.any(np.abs(eigs) < options.degeneracy_ratio * emax))
        index = int(np.sum(eigs < -options.degeneracy_ratio * emax))
        cand = ReducedCriticalPoint(
            ts=tuple(float(t) for t in ts),
            points=tuple(np.asarray(x) for x in pts),
            value=float(objective(z, anchors)),
            grad_norm=grad_norm,
            hessian_eigenvalues=tuple(float(e) for e in eigs),
            degenerate=degenerate,
            morse_index=None if degenerate else index,
        )
        if not _is_duplicate(cand, found, manifold, options):
            found.append(cand)

    if not found:
        raise NoCriticalPointFound(
            "no interior critical point survived %d seeds" % options.seeds)
    return sorted(found, key=lambda c: c.value)


def _fd_derivatives(fn: Callable, z: np.ndarray, anchors: List[np.ndarray],
                    step: float) -> Tuple[np.ndarray, np.ndarray]:
    m = z.size
    grad = np.empty(m)
    hess = np.empty((m, m))
    f0 = fn(z, anchors)
    steps = step * np.maximum(1.0, np.abs(z))
    for i in range(m):
        e = np.zeros(m)
        e[i] = steps[i]
        fp, fm = fn(z + e, anchors), fn(z - e, anchors)
        grad[i] = (fp - fm) / (2 * steps[i])
        hess[i, i] = (fp - 2 * f0 + fm) / steps[i] ** 2
    for i in range(m):
        for j in range(i + 1, m):
            ei = np.zeros(m)
            ej = np.zeros(m)
            ei[i] = steps[i]
            ej[j] = steps[j]
            fpp = fn(z + ei + ej, anchors)
            fpm = fn(z + ei - ej, anchors)
            fmp = fn(z - ei + ej, anchors)
            fmm = fn(z - ei - ej, anchors)
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (
                4 * steps[i] * steps[j])
    return grad, hess


def _is_duplicate(cand: ReducedCriticalPoint,
                  found: Sequence[ReducedCriticalPoint],
                  manifold: ModelManifold, options: FinderOptions) -> bool:
    for other in found:
        if abs(cand.value - other.value) > options.dedupe_value_tol * (
                1.0 + abs(other.value)):
            continue
        # greedy matching of peaks up to permutation
        used = set()
        matched = 0
        for x, t in zip(cand.points, cand.ts):
            for j, (y, s) in enumerate(zip(other.points, other.ts)):
                if j in used:
                    continue
                if (manifold.geodesic_distance(x, y)
                        <= options.dedupe_distance_tol * (
                            1.0 + manifold.injectivity_radius)
                        and abs(t - s) <= 1e-6 * (1.0 + abs(s))):
                    used.add(j)
                    matched += 1
                    break
        if matched == cand.k:
            return True
    return False
