"""Model Riemannian manifolds with closed-form geometry.

Only two families are provided, a round sphere and a flat torus.  Both have
constant scalar curvature, explicit geodesic distance, exponential and
logarithm maps, and an explicit volume density in normal coordinates, so
every radial integral downstream reduces exactly to a one-dimensional
weighted integral.  The volume density enters through the normal-coordinate
expansion density(r) = 1 - Scal r^2 / (6N) + O(r^4), which is what the
area-ratio check below verifies against the closed form.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np


class OutOfChart(ValueError):
    """Normal-coordinate radius reached or exceeded the injectivity radius."""


class SeparationTooSmall(ValueError):
    """Peak configuration violates the required pairwise separation."""


class ModelManifold:
    """Common interface of the model spaces.  Points are numpy vectors."""

    dim: int

    @property
    def injectivity_radius(self) -> float:
        raise NotImplementedError

    def base_point(self) -> np.ndarray:
        raise NotImplementedError

    def scal(self, x: np.ndarray) -> float:
        """Scalar curvature at x (constant on both model families)."""
        raise NotImplementedError

    def volume_density(self, x: np.ndarray, r) -> np.ndarray:
        """Ratio of the Riemannian volume element to the Euclidean one at
        geodesic radius r in normal coordinates centred at x."""
        raise NotImplementedError

    def geodesic_distance(self, x: np.ndarray, y: np.ndarray) -> float:
        raise NotImplementedError

    def exp_point(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Exponential map; v is a tangent vector at x."""
        raise NotImplementedError

    def log_map(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Inverse of exp_point for y within the injectivity radius of x."""
        raise NotImplementedError

    def tangent_frame(self, x: np.ndarray) -> np.ndarray:
        """Orthonormal tangent basis at x, shape (dim, ambient dim)."""
        raise NotImplementedError

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    # chart helpers used by the reduced-energy optimiser
    def from_chart(self, anchor: np.ndarray, y: np.ndarray) -> np.ndarray:
        frame = self.tangent_frame(anchor)
        return self.exp_point(anchor, frame.T @ np.asarray(y, dtype=float))

    def to_chart(self, anchor: np.ndarray, x: np.ndarray) -> np.ndarray:
        frame = self.tangent_frame(anchor)
        return frame @ self.log_map(anchor, x)

    def _check_radius(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise OutOfChart("negative radius")
        if np.any(r >= self.injectivity_radius):
            raise OutOfChart(
                "radius %.6g reaches the injectivity radius %.6g"
                % (float(np.max(r)), self.injectivity_radius))
        return r


class Sphere(ModelManifold):
    """Round sphere of dimension dim and radius rho, embedded in R^{dim+1}."""

    def __init__(self, dim: int, radius: float = 1.0):
        if dim < 2:
            raise ValueError("sphere dimension must be at least 2")
        if radius <= 0:
            raise ValueError("sphere radius must be positive")
        self.dim = int(dim)
        self.radius = float(radius)

    def __repr__(self) -> str:
        return "Sphere(dim=%d, radius=%r)" % (self.dim, self.radius)

    @property
    def injectivity_radius(self) -> float:
        return np.pi * self.radius

    def base_point(self) -> np.ndarray:
        x = np.zeros(self.dim + 1)
        x[0] = self.radius
        return x

    def scal(self, x: np.ndarray) -> float:
        return self.dim * (self.dim - 1) / self.radius ** 2

    def volume_density(self, x: np.ndarray, r) -> np.ndarray:
        r = self._check_radius(r)
        t = r / self.radius
        # sin(t)/t with the removable singularity at 0
        ratio = np.where(t > 0, np.sin(np.where(t > 0, t, 1.0)) / np.where(t > 0, t, 1.0), 1.0)
        return ratio ** (self.dim - 1)

    def geodesic_distance(self, x: np.ndarray, y: np.ndarray) -> float:
        chord = np.linalg.norm(np.asarray(x) - np.asarray(y))
        s = np.clip(chord / (2.0 * self.radius), -1.0, 1.0)
        return 2.0 * self.radius * float(np.arcsin(s))

    def exp_point(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return x.copy()
        t = nv / self.radius
        return np.cos(t) * x + (np.sin(t) * self.radius / nv) * v

    def log_map(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d = self.geodesic_distance(x, y)
        if d == 0.0:
            return np.zeros_like(x)
        if d >= self.injectivity_radius:
            raise OutOfChart("antipodal points have no unique logarithm")
        proj = y - (x @ y / self.radius ** 2) * x
        nproj = np.linalg.norm(proj)
        return d * proj / nproj

    def tangent_frame(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = self.dim + 1
        A = np.empty((n, n))
        A[:, 0] = x / self.radius
        A[:, 1:] = np.eye(n)[:, : n - 1]
        Q, R = np.linalg.qr(A)
        # fix signs so the frame is a deterministic function of x
        signs = np.sign(np.diag(R))
        signs[signs == 0] = 1.0
        Q = Q * signs
        return Q[:, 1:].T

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        g = rng.standard_normal(self.dim + 1)
        return self.radius * g / np.linalg.norm(g)


class FlatTorus(ModelManifold):
    """Flat torus, a product of circles with the given periods."""

    def __init__(self, periods: Sequence[float]):
        periods = tuple(float(t) for t in periods)
        if len(periods) < 1 or any(t <= 0 for t in periods):
            raise ValueError("periods must be positive")
        self.dim = len(periods)
        self.periods = periods

    def __repr__(self) -> str:
        return "FlatTorus(periods=%r)" % (self.periods,)

    @property
    def injectivity_radius(self) -> float:
        return min(self.periods) / 2.0

    def base_point(self) -> np.ndarray:
        return np.zeros(self.dim)

    def scal(self, x: np.ndarray) -> float:
        return 0.0

    def volume_density(self, x: np.ndarray, r) -> np.ndarray:
        r = self._check_radius(r)
        return np.ones_like(r)

    def wrap(self, x: np.ndarray) -> np.ndarray:
        return np.mod(np.asarray(x, dtype=float), self.periods)

    def _reduced(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        per = np.asarray(self.periods)
        return d - per * np.round(d / per)

    def geodesic_distance(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(np.linalg.norm(self._reduced(x, y)))

    def exp_point(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.wrap(np.asarray(x, dtype=float) + np.asarray(v, dtype=float))

    def log_map(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self._reduced(x, y)

    def tangent_frame(self, x: np.ndarray) -> np.ndarray:
        return np.eye(self.dim)

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, self.periods, size=self.dim)


@dataclass(frozen=True)
class AreaRatioCheck:
    """Result of fitting the normal-coordinate volume density."""

    kappa_fit: float
    kappa_predicted: float
    radii: Tuple[float, ...]
    max_fit_residual: float

    @property
    def relative_error(self) -> float:
        if self.kappa_predicted == 0.0:
            return abs(self.kappa_fit)
        return abs(self.kappa_fit / self.kappa_predicted - 1.0)


def default_area_radii(manifold: ModelManifold) -> List[float]:
    """Probe radii for the density fit: small enough that the neglected r^6
    term stays below the fit tolerances, large enough to beat roundoff."""
    return [0.01 * k * manifold.injectivity_radius for k in range(1, 7)]


def area_ratio_check(manifold: ModelManifold,
                     r_list: Sequence[float],
                     point: Optional[np.ndarray] = None) -> AreaRatioCheck:
    """Fit density(r) = 1 + kappa r^2 (+ quartic correction) on r_list and
    compare kappa against the closed form -Scal/(6 dim)."""
    if point is None:
        point = manifold.base_point()
    r = np.asarray(sorted(r_list), dtype=float)
    if r.size < 3:
        raise ValueError("need at least three radii to fit the density")
    dens = manifold.volume_density(point, r)
    A = np.column_stack([r ** 2, r ** 4])
    coef, *_ = np.linalg.lstsq(A, dens - 1.0, rcond=None)
    resid = dens - 1.0 - A @ coef
    N = manifold.dim
    kappa_pred = -manifold.scal(point) / (6.0 * N)
    return AreaRatioCheck(kappa_fit=float(coef[0]),
                          kappa_predicted=float(kappa_pred),
                          radii=tuple(float(v) for v in r),
                          max_fit_residual=float(np.max(np.abs(resid))))


@dataclass
class PeakConfiguration:
    """A list of candidate peak locations on a model manifold."""

    manifold: ModelManifold
    points: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.points = [np.asarray(x, dtype=float) for x in self.points]

    @property
    def k(self) -> int:
        return len(self.points)

    def min_separation(self) -> float:
        """Smallest pairwise geodesic distance, inf for fewer than 2 peaks."""
        if self.k < 2:
            return np.inf
        dists = [self.manifold.geodesic_distance(a, b)
                 for i, a in enumerate(self.points)
                 for b in self.points[i + 1:]]
        return float(min(dists))

    def require_separation(self, bound: float) -> None:
        sep = self.min_separation()
        if sep < bound:
            raise SeparationTooSmall(
                "pairwise separation %.6g below required %.6g" % (sep, bound))

    def require_supports_disjoint(self, r0: float) -> None:
        """Bubbles of cutoff radius r0 must have disjoint supports."""
        self.require_separation(2.0 * r0)
