"""Radial ground state of the coupled critical system on R^N.

Solves

    U'' + (N-1)/r U' + V^p = 0,
    V'' + (N-1)/r V' + U^q = 0,      U, V > 0, decaying,

with the normalisation V(0) = 1, by shooting in a = U(0).  A plain forward
shot cannot resolve the far field: the contamination of the threshold
trajectory grows like a constant against tails of size r^{2-N}, so the tail
is wrong in relative terms long before the truncation radius.  The solver
therefore works in two stages.  A bisection on a classifies forward shots
(U crossing zero means a is too small, V crossing zero or a slow V tail
means a is too large) until the bracket is tight, and a least-squares match
then glues the forward trajectory to a backward trajectory started at r_max
from a far-field power expansion with unknown amplitudes.  The matched
unknowns are (a, A_U, c_V) where far away

    V ~ c_V r^{2-N} + ...,    U ~ A_U r^{2-N} + C_p c_V^p r^{2-(N-2)p} + ...

and the dots are higher-order power corrections generated by two Picard
passes over the tails.  The exponent p = N/(N-2) is refused: there the
second U-amplitude degenerates into a resonant r^{2-N} log r term.
"""
from __future__ import annotations

import enum
import io
import json
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import least_squares

from .hyperbola import (HyperbolaPoint, InvalidExponent, classify_regime,
                        decay_rates, hyperbola_point, serrin_exponent,
                        _compare)
from .numerics import derivative_on_grid, loglog_slope


class BracketNotFound(RuntimeError):
    """Shooting bracket endpoints classify to the same side."""


class NoConvergence(RuntimeError):
    """Matching refinement failed to reach the residual tolerance."""


class PositivityLost(RuntimeError):
    """Assembled profile is not strictly positive."""


class WindowTooShort(ValueError):
    """Decay-validation window holds too few grid points."""


class UnsupportedExponent(ValueError):
    """p sits at the resonant Serrin exponent N/(N-2)."""


class ShotClass(enum.Enum):
    CROSSES_ZERO = "crosses-zero"
    SLOW_DECAY = "slow-decay"
    CONVERGED = "converged"


@dataclass(frozen=True)
class ShootingOutcome:
    """Classification of a single forward shot."""

    classification: ShotClass
    component: Optional[str]          # "u" or "v" for a crossing
    crossing_radius: Optional[float]
    tail_growth: Optional[float]      # growth factor of r^{N-2} V over the
                                      # trailing window when no crossing

    @property
    def side(self) -> int:
        """+1 when a is above the threshold, -1 below, 0 undecided."""
        if self.classification is ShotClass.CROSSES_ZERO:
            return -1 if self.component == "u" else +1
        if self.classification is ShotClass.SLOW_DECAY:
            return +1
        return 0


@dataclass(frozen=True)
class SolverOptions:
    r_max: float = 1e3
    rtol: float = 1e-12
    bisect_rtol: float = 1e-12
    bisect_shot_rtol: float = 1e-10
    bracket: Tuple[float, float] = (0.05, 20.0)
    match_target_v: float = 1e-3      # aim V(r_match) near this value; the
                                      # glue floor grows like r_match^{N-2}
                                      # over the forward roundoff level
    match_tol: float = 1e-8           # acceptance on the scaled glue residual
    residual_tol: float = 1e-8        # max-norm tolerance on the ODE residual
    grid_per_decade: int = 400
    grid_r_min: float = 1e-5
    tail_window: Tuple[float, float] = (0.5, 0.95)   # fractions of r_max
    slow_growth_factor: float = 1.25


@dataclass(frozen=True)
class Normalization:
    """Gauge record: profile values at the origin and cumulative rescale."""

    v_at_zero: float
    u_at_zero: float
    scale: float = 1.0

    def tag(self) -> Tuple[float, float, float]:
        return (self.v_at_zero, self.u_at_zero, self.scale)


@dataclass(frozen=True)
class DecayCheck:
    u_slope: float
    v_slope: float
    du_slope: float
    dv_slope: float
    expected_u: float
    expected_v: float
    window: Tuple[float, float]
    n_points: int

    @property
    def max_relative_deviation(self) -> float:
        devs = [abs(self.u_slope / self.expected_u - 1.0),
                abs(self.v_slope / self.expected_v - 1.0),
                abs(self.du_slope / (self.expected_u - 1.0) - 1.0),
                abs(self.dv_slope / (self.expected_v - 1.0) - 1.0)]
        return float(max(devs))


# ---------------------------------------------------------------------------
# far-field power expansion

def _particular_term(amp: float, sigma: float, N: int) -> Optional[Tuple[float, float]]:
    """Particular solution of -(w'' + (N-1)/r w') = amp r^{-sigma} as a pure
    power amp' r^{-s}; None when the exponent is resonant."""
    s = sigma - 2.0
    denom = s * (N - 2.0 - s)
    if abs(s) < 1e-6 or abs(denom) < 1e-6:
        return None
    return (amp / denom, s)


def _power_expand(terms: List[Tuple[float, float]], expo: float,
                  keep: int = 6) -> List[Tuple[float, float]]:
    """First-order expansion of (sum amp_i r^{-s_i})^expo around the slowest
    decaying term."""
    terms = sorted(terms, key=lambda t: t[1])
    a1, s1 = terms[0]
    out = [(np.sign(a1) * abs(a1) ** expo, s1 * expo)]
    for ai, si in terms[1:keep]:
        out.append((expo * np.sign(a1) * abs(a1) ** (expo - 1.0) * ai,
                    s1 * (expo - 1.0) + si))
    return out


def _merge_terms(terms: List[Tuple[float, float]], r_ref: float,
                 rel_floor: float = 1e-18) -> List[Tuple[float, float]]:
    terms = sorted(terms, key=lambda t: t[1])
    merged: List[Tuple[float, float]] = []
    for amp, s in terms:
        if merged and abs(s - merged[-1][1]) < 1e-9:
            merged[-1] = (merged[-1][0] + amp, merged[-1][1])
        else:
            merged.append((amp, s))
    if not merged:
        return merged
    lead = abs(merged[0][0]) * r_ref ** (-merged[0][1]) + 1e-300
    return [(a, s) for a, s in merged
            if abs(a) * r_ref ** (-s) > rel_floor * lead]


def far_field_terms(p: float, q: float, N: int, a_u: float, c_v: float,
                    r_ref: float, iterations: int = 2
                    ) -> Tuple[List[Tuple[float, float]], List[Tuple[float, float]]]:
    """Power expansions of (U, V) far away, as lists of (amplitude, s) with
    f(r) = sum amplitude * r^{-s}, built by Picard iteration from the
    homogeneous amplitudes."""
    u_terms = [(a_u, N - 2.0)]
    v_terms = [(c_v, N - 2.0)]
    for _ in range(iterations):
        u_new = [(a_u, N - 2.0)]
        for amp, sigma in _power_expand(v_terms, p):
            t = _particular_term(amp, sigma, N)
            if t is not None:
                u_new.append(t)
        v_new = [(c_v, N - 2.0)]
        for amp, sigma in _power_expand(u_terms, q):
            t = _particular_term(amp, sigma, N)
            if t is not None:
                v_new.append(t)
        u_terms = _merge_terms(u_new, r_ref)
        v_terms = _merge_terms(v_new, r_ref)
    return u_terms, v_terms


def eval_power_terms(terms: Sequence[Tuple[float, float]], r,
                     derivative: bool = False) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    for amp, s in terms:
        if derivative:
            out += -s * amp * r ** (-s - 1.0)
        else:
            out += amp * r ** (-s)
    return out


# ---------------------------------------------------------------------------
# integration

def _rhs(r, y, p, q, N):
    U, dU, V, dV = y
    Vp = np.sign(V) * abs(V) ** p
    Uq = np.sign(U) * abs(U) ** q
    c = (N - 1.0) / r
    return (dU, -c * dU - Vp, dV, -c * dV - Uq)


_R_SERIES = 1e-6


def _series_state(a: float, p: float, q: float, N: int, r: float):
    # U = a - r^2/(2N) + O(r^4), V = 1 - a^q r^2/(2N) + O(r^4); the quartic
    # terms are below 1e-24 at the handoff radius
    return (a - r * r / (2.0 * N), -r / N,
            1.0 - (a ** q) * r * r / (2.0 * N), -(a ** q) * r / N)


def shoot(point: HyperbolaPoint, a: float,
          options: SolverOptions = SolverOptions()) -> ShootingOutcome:
    """Classify the forward shot with U(0) = a, V(0) = 1."""
    p, q, N = point.p, point.q, point.N

    def ev_u(r, y, *args):
        return y[0]

    def ev_v(r, y, *args):
        return y[2]

    ev_u.terminal = True
    ev_u.direction = -1.0
    ev_v.terminal = True
    ev_v.direction = -1.0
    sol = solve_ivp(_rhs, (_R_SERIES, options.r_max),
                    _series_state(a, p, q, N, _R_SERIES),
                    args=(p, q, N), method="DOP853",
                    rtol=options.bisect_shot_rtol, atol=1e-20,
                    events=(ev_u, ev_v), dense_output=True)
    if sol.t_events[0].size:
        return ShootingOutcome(ShotClass.CROSSES_ZERO, "u",
                               float(sol.t_events[0][0]), None)
    if sol.t_events[1].size:
        return ShootingOutcome(ShotClass.CROSSES_ZERO, "v",
                               float(sol.t_events[1][0]), None)
    # no crossing before r_max: inspect growth of r^{N-2} V over the trailing
    # window; the true solution saturates while a slow tail keeps growing
    r_hi = sol.t[-1]
    rr = np.geomspace(0.5 * r_hi, r_hi, 24)
    fV = rr ** (N - 2.0) * sol.sol(rr)[2]
    growth = float(fV[-1] / max(fV[0], 1e-300))
    if growth > options.slow_growth_factor and np.all(np.diff(fV) > 0):
        return ShootingOutcome(ShotClass.SLOW_DECAY, "v", None, growth)
    return ShootingOutcome(ShotClass.CONVERGED, None, None, growth)


# ---------------------------------------------------------------------------
# ground state container

@dataclass
class GroundState:
    """Matched radial profile with far-field closed form beyond the grid."""

    point: HyperbolaPoint
    a: float
    r: np.ndarray
    u: np.ndarray
    v: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    far_u_terms: Tuple[Tuple[float, float], ...]
    far_v_terms: Tuple[Tuple[float, float], ...]
    r_max: float
    r_match: float
    normalization: Normalization
    match_residual: float
    residual_max: float
    error_estimate: float
    diagnostics: Dict[str, float] = field(default_factory=dict)
    _interp: Optional[dict] = field(default=None, repr=False, compare=False)

    @property
    def p(self) -> float:
        return self.point.p

    @property
    def q(self) -> float:
        return self.point.q

    @property
    def N(self) -> int:
        return self.point.N

    # -- evaluation ---------------------------------------------------------
    def _splines(self) -> dict:
        if self._interp is None:
            pos = self.r > 0
            x = np.log(self.r[pos])
            self._interp = {
                "u": CubicSpline(x, np.log(self.u[pos])),
                "v": CubicSpline(x, np.log(self.v[pos])),
                "du": CubicSpline(x, np.log(-self.du[pos])),
                "dv": CubicSpline(x, np.log(-self.dv[pos])),
            }
        return self._interp

    def _eval(self, key: str, r, sign: float = 1.0) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r).astype(float)
        out = np.empty_like(r)
        r_lo = self.r[1] if self.r[0] == 0.0 else self.r[0]
        near = r < r_lo
        mid = (r >= r_lo) & (r <= self.r_max)
        far = r > self.r_max
        if np.any(near):
            out[near] = self._series(key, r[near])
        if np.any(mid):
            out[mid] = sign * np.exp(self._splines()[key](np.log(r[mid])))
        if np.any(far):
            terms = self.far_u_terms if key in ("u", "du") else self.far_v_terms
            out[far] = eval_power_terms(terms, r[far],
                                        derivative=key.startswith("d"))
        return out[0] if scalar else out

    def _series(self, key: str, r: np.ndarray) -> np.ndarray:
        # quadratic series about the origin: in the solver gauge
        # U = a_g - s^2/(2N), V = 1 - a_g^q s^2/(2N); rescaling by scale lam
        # maps f to amp * f(r/lam)
        nz = self.normalization
        lam = nz.scale
        N = self.N
        s = r / lam
        a_g = self.diagnostics.get("gauge_a", self.a)
        if key == "u":
            return nz.u_at_zero * (1.0 - s * s / (2.0 * N * a_g))
        if key == "du":
            return (nz.u_at_zero / (lam * a_g)) * (-s / N)
        if key == "v":
            return nz.v_at_zero * (1.0 - (a_g ** self.q) * s * s / (2.0 * N))
        return (nz.v_at_zero / lam) * (-(a_g ** self.q) * s / N)

    def u_of(self, r) -> np.ndarray:
        return self._eval("u", r)

    def v_of(self, r) -> np.ndarray:
        return self._eval("v", r)

    def du_of(self, r) -> np.ndarray:
        return self._eval("du", r, sign=-1.0)

    def dv_of(self, r) -> np.ndarray:
        return self._eval("dv", r, sign=-1.0)


def system_residual(gs: GroundState) -> float:
    """Max-norm residual of the radial system on the interior grid, with the
    second derivatives obtained by local polynomial differentiation of the
    stored first-derivative samples (nothing is taken from the ODE itself)."""
    pos = gs.r > 0
    r = gs.r[pos]
    ddu = derivative_on_grid(r, gs.du[pos], 1)
    ddv = derivative_on_grid(r, gs.dv[pos], 1)
    c = (gs.N - 1.0) / r
    res_u = ddu + c * gs.du[pos] + gs.v[pos] ** gs.p
    res_v = ddv + c * gs.dv[pos] + gs.u[pos] ** gs.q
    return float(max(np.max(np.abs(res_u)), np.max(np.abs(res_v))))


# ---------------------------------------------------------------------------
# solver

def solve_ground_state(point: HyperbolaPoint,
                       options: SolverOptions = SolverOptions()) -> GroundState:
    """Shooting plus two-sided matching; see the module docstring."""
    p, q, N = point.p, point.q, point.N
    if _compare(point.p, point.p_exact, serrin_exponent(N)) == 0:
        raise UnsupportedExponent(
            "p = N/(N-2) is resonant; the far field picks up a log factor")
    t_start = time.time()

    # stage 1: bisection bracket on a
    lo, hi = options.bracket
    s_lo = shoot(point, lo, options)
    s_hi = shoot(point, hi, options)
    tries = 0
    while s_lo.side >= 0 and tries < 3:
        lo *= 0.25
        s_lo = shoot(point, lo, options)
        tries += 1
    tries = 0
    while s_hi.side <= 0 and tries < 3:
        hi *= 4.0
        s_hi = shoot(point, hi, options)
        tries += 1
    if not (s_lo.side < 0 < s_hi.side):
        raise BracketNotFound(
            "bracket (%g, %g) classifies to sides (%d, %d)"
            % (lo, hi, s_lo.side, s_hi.side))
    n_bis = 0
    while (hi - lo) > options.bisect_rtol * hi:
        mid = 0.5 * (lo + hi)
        out = shoot(point, mid, options)
        n_bis += 1
        if out.side < 0:
            lo = mid
        elif out.side > 0:
            hi = mid
        else:            # exact hit, keep the bracket shrinking around it
            lo = mid * (1.0 - 0.25 * (hi - lo) / hi)
            hi = mid * (1.0 + 0.25 * (hi - lo) / hi)
            break
        if n_bis > 200:
            raise NoConvergence("bisection stalled")
    a0 = 0.5 * (lo + hi)

    # stage 2: seed trajectory, matching radius and far-field amplitudes
    seed = solve_ivp(_rhs, (_R_SERIES, options.r_max),
                     _series_state(a0, p, q, N, _R_SERIES),
                     args=(p, q, N), method="DOP853",
                     rtol=options.rtol, atol=1e-30, dense_output=True,
                     events=_crossing_events())
    r_reached = float(seed.t[-1])
    rr = np.geomspace(1.0, 0.9 * r_reached, 600)
    vv = seed.sol(rr)[2]
    good = vv > 0
    rr, vv = rr[good], vv[good]
    idx = np.argmin(np.abs(np.log(vv / options.match_target_v)))
    r_match = float(np.clip(rr[idx], 4.0, 0.1 * options.r_max))
    y_m = seed.sol(r_match)
    c_v0 = float(y_m[2] * r_match ** (N - 2.0))
    # subtract the particular part to seed the homogeneous U amplitude
    part = _particular_term(np.sign(c_v0) * abs(c_v0) ** p, (N - 2.0) * p, N)
    u_part = part[0] * r_match ** (-part[1]) if part else 0.0
    a_u0 = float((y_m[0] - u_part) * r_match ** (N - 2.0))

    scale = np.abs(y_m) + 1e-300

    def glue(x):
        a, a_u, c_v = x
        fw = solve_ivp(_rhs, (_R_SERIES, r_match),
                       _series_state(a, p, q, N, _R_SERIES),
                       args=(p, q, N), method="DOP853",
                       rtol=options.rtol, atol=1e-30)
        ut, vt = far_field_terms(p, q, N, a_u, c_v, options.r_max)
        y_far = [eval_power_terms(ut, options.r_max),
                 eval_power_terms(ut, options.r_max, derivative=True),
                 eval_power_terms(vt, options.r_max),
                 eval_power_terms(vt, options.r_max, derivative=True)]
        bw = solve_ivp(_rhs, (options.r_max, r_match), y_far,
                       args=(p, q, N), method="DOP853",
                       rtol=options.rtol, atol=1e-300)
        return (fw.y[:, -1] - bw.y[:, -1]) / scale

    fit = least_squares(glue, x0=[a0, a_u0, c_v0], method="lm",
                        x_scale=[abs(a0), max(abs(a_u0), 1e-12), abs(c_v0)],
                        xtol=1e-15, ftol=1e-15, gtol=1e-15)
    match_residual = float(np.max(np.abs(fit.fun)))
    if not fit.success or match_residual > options.match_tol:
        raise NoConvergence(
            "matching stalled: residual %.3e (tolerance %g)"
            % (match_residual, options.match_tol))
    a, a_u, c_v = (float(t) for t in fit.x)

    # stage 3: dense assembly on the output grid
    n_nodes = int(np.ceil(np.log10(options.r_max / options.grid_r_min)
                          * options.grid_per_decade))
    grid = np.concatenate([[0.0],
                           np.geomspace(options.grid_r_min, options.r_max,
                                        n_nodes + 1)])
    fw = solve_ivp(_rhs, (_R_SERIES, r_match),
                   _series_state(a, p, q, N, _R_SERIES),
                   args=(p, q, N), method="DOP853",
                   rtol=options.rtol, atol=1e-30, dense_output=True)
    u_terms, v_terms = far_field_terms(p, q, N, a_u, c_v, options.r_max)
    y_far = [eval_power_terms(u_terms, options.r_max),
             eval_power_terms(u_terms, options.r_max, derivative=True),
             eval_power_terms(v_terms, options.r_max),
             eval_power_terms(v_terms, options.r_max, derivative=True)]
    bw = solve_ivp(_rhs, (options.r_max, r_match), y_far,
                   args=(p, q, N), method="DOP853",
                   rtol=options.rtol, atol=1e-300, dense_output=True)

    U = np.empty_like(grid)
    V = np.empty_like(grid)
    dU = np.empty_like(grid)
    dV = np.empty_like(grid)
    U[0], dU[0], V[0], dV[0] = a, 0.0, 1.0, 0.0
    small = (grid > 0) & (grid < _R_SERIES)
    inner = (grid >= _R_SERIES) & (grid <= r_match)
    outer = grid > r_match
    yf = fw.sol(grid[inner])
    U[inner], dU[inner], V[inner], dV[inner] = yf
    yb = bw.sol(grid[outer])
    U[outer], dU[outer], V[outer], dV[outer] = yb
    if np.any(small):
        ys = np.array([_series_state(a, p, q, N, float(s))
                       for s in grid[small]]).T
        U[small], dU[small], V[small], dV[small] = ys

    if np.any(U <= 0.0) or np.any(V[grid < options.r_max] <= 0.0):
        raise PositivityLost("assembled profile is not strictly positive")
    if np.any(np.diff(U[grid > 0]) >= 0) or np.any(np.diff(V[grid > 0]) >= 0):
        raise PositivityLost("assembled profile is not strictly decreasing")

    err_est = max(2.0 * match_residual, 50.0 * options.rtol) * abs(a)
    gs = GroundState(
        point=point, a=a, r=grid, u=U, v=V, du=dU, dv=dV,
        far_u_terms=tuple((float(x), float(s)) for x, s in u_terms),
        far_v_terms=tuple((float(x), float(s)) for x, s in v_terms),
        r_max=float(options.r_max), r_match=r_match,
        normalization=Normalization(v_at_zero=1.0, u_at_zero=a, scale=1.0),
        match_residual=match_residual,
        residual_max=np.nan, error_estimate=float(err_est),
        diagnostics={"bisect_iters": float(n_bis),
                     "lsq_nfev": float(fit.nfev),
                     "a_u": a_u, "c_v": c_v,
                     "gauge_a": a,
                     "solve_seconds": time.time() - t_start},
    )
    gs.residual_max = system_residual(gs)
    if gs.residual_max > options.residual_tol:
        raise NoConvergence(
            "ODE residual %.3e above tolerance %g"
            % (gs.residual_max, options.residual_tol))
    return gs


def _crossing_events():
    def ev_u(r, y, *args):
        return y[0]

    def ev_v(r, y, *args):
        return y[2]

    ev_u.terminal = True
    ev_u.direction = -1.0
    ev_v.terminal = True
    ev_v.direction = -1.0
    return (ev_u, ev_v)


# ---------------------------------------------------------------------------
# decay validation and rescaling

def validate_decay(gs: GroundState,
                   window: Optional[Tuple[float, float]] = None,
                   min_points: int = 20) -> DecayCheck:
    """Log-log slopes of (U, V, U', V') over a tail window of the grid,
    compared against the closed-form decay rates."""
    if window is None:
        window = (0.5 * gs.r_max, 0.95 * gs.r_max)
    r_lo, r_hi = window
    if r_lo < 0.5 * gs.r_max - 1e-12 or r_hi > gs.r_max + 1e-12:
        raise ValueError("window must sit inside [r_max/2, r_max]")
    mask = (gs.r >= r_lo) & (gs.r <= r_hi)
    n = int(np.count_nonzero(mask))
    if n < min_points:
        raise WindowTooShort("only %d grid points in the window" % n)
    r = gs.r[mask]
    rates = decay_rates(gs.point.p_exact if gs.point.p_exact is not None
                        else gs.p, gs.N)

    def slope(f: np.ndarray, log_flag: bool) -> float:
        vals = np.abs(f)
        if log_flag:
            vals = vals / np.log(r)
        return loglog_slope(r, vals)[0]

    return DecayCheck(
        u_slope=slope(gs.u[mask], rates.u_log),
        v_slope=slope(gs.v[mask], rates.v_log),
        du_slope=slope(gs.du[mask], rates.du_log),
        dv_slope=slope(gs.dv[mask], rates.dv_log),
        expected_u=rates.u_rate, expected_v=rates.v_rate,
        window=(float(r_lo), float(r_hi)), n_points=n)


def rescale(gs: GroundState, delta: float) -> GroundState:
    """Concentrate the profile: U_d(r) = d^{-N/(q+1)} U(r/d) and
    V_d(r) = d^{-N/(p+1)} V(r/d).  The pair solves the same system."""
    if delta <= 0:
        raise ValueError("scale must be positive")
    N, p, q = gs.N, gs.p, gs.q
    cu = delta ** (-N / (q + 1.0))
    cv = delta ** (-N / (p + 1.0))
    far_u = tuple((amp * cu * delta ** s, s) for amp, s in gs.far_u_terms)
    far_v = tuple((amp * cv * delta ** s, s) for amp, s in gs.far_v_terms)
    nz = gs.normalization
    return replace(
        gs,
        a=gs.a * cu,
        r=gs.r * delta,
        u=gs.u * cu, du=gs.du * cu / delta,
        v=gs.v * cv, dv=gs.dv * cv / delta,
        far_u_terms=far_u, far_v_terms=far_v,
        r_max=gs.r_max * delta, r_match=gs.r_match * delta,
        normalization=Normalization(v_at_zero=nz.v_at_zero * cv,
                                    u_at_zero=nz.u_at_zero * cu,
                                    scale=nz.scale * delta),
        residual_max=gs.residual_max * max(cu / delta ** 2, cv / delta ** 2),
        error_estimate=gs.error_estimate * cu,
        _interp=None,
    )


# ---------------------------------------------------------------------------
# on-disk cache

_HEADER_KEYS = ("p", "q", "N", "p_exact", "q_exact", "a", "r_max", "r_match",
                "match_residual", "residual_max", "error_estimate",
                "normalization", "far_u_terms", "far_v_terms", "diagnostics")


def save_ground_state(gs: GroundState, path: str) -> None:
    """Header of '# key=json' lines followed by a CSV table of the samples."""
    meta = {
        "p": gs.p, "q": gs.q, "N": gs.N,
        "p_exact": str(gs.point.p_exact) if gs.point.p_exact is not None else None,
        "q_exact": str(gs.point.q_exact) if gs.point.q_exact is not None else None,
        "a": gs.a, "r_max": gs.r_max, "r_match": gs.r_match,
        "match_residual": gs.match_residual,
        "residual_max": gs.residual_max,
        "error_estimate": gs.error_estimate,
        "normalization": list(gs.normalization.tag()),
        "far_u_terms": [list(t) for t in gs.far_u_terms],
        "far_v_terms": [list(t) for t in gs.far_v_terms],
        "diagnostics": gs.diagnostics,
    }
    buf = io.StringIO()
    for key in _HEADER_KEYS:
        buf.write("# %s=%s\n" % (key, json.dumps(meta[key])))
    buf.write("r,u,v,du,dv\n")
    for i in range(gs.r.size):
        buf.write("%.17g,%.17g,%.17g,%.17g,%.17g\n"
                  % (gs.r[i], gs.u[i], gs.v[i], gs.du[i], gs.dv[i]))
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def load_ground_state(path: str) -> GroundState:
    meta: Dict[str, object] = {}
    rows: List[List[float]] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, raw = line[1:].partition("=")
                meta[key.strip()] = json.loads(raw)
            elif not line.startswith("r,"):
                rows.append([float(tok) for tok in line.split(",")])
    arr = np.asarray(rows, dtype=float)
    from fractions import Fraction
    p_exact = Fraction(meta["p_exact"]) if meta.get("p_exact") else None
    q_exact = Fraction(meta["q_exact"]) if meta.get("q_exact") else None
    point = HyperbolaPoint(p=float(meta["p"]), q=float(meta["q"]),
                           N=int(meta["N"]), p_exact=p_exact, q_exact=q_exact)
    nz = meta["normalization"]
    return GroundState(
        point=point, a=float(meta["a"]),
        r=arr[:, 0], u=arr[:, 1], v=arr[:, 2], du=arr[:, 3], dv=arr[:, 4],
        far_u_terms=tuple((float(a), float(s)) for a, s in meta["far_u_terms"]),
        far_v_terms=tuple((float(a), float(s)) for a, s in meta["far_v_terms"]),
        r_max=float(meta["r_max"]), r_match=float(meta["r_match"]),
        normalization=Normalization(v_at_zero=float(nz[0]),
                                    u_at_zero=float(nz[1]),
                                    scale=float(nz[2])),
        match_residual=float(meta["match_residual"]),
        residual_max=float(meta["residual_max"]),
        error_estimate=float(meta["error_estimate"]),
        diagnostics={k: float(v) for k, v in dict(meta["diagnostics"]).items()},
    )
