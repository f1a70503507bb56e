"""Exponent bookkeeping for the critical elliptic system.

The pair of exponents (p, q) lives on the critical hyperbola

    1/(p+1) + 1/(q+1) = (N-2)/N,        1 < p <= (N+2)/(N-2) <= q,

in dimension N.  Two thresholds of p organise everything downstream: the
Serrin exponent N/(N-2), which separates fast from slow decay of the first
profile component, and the Sobolev exponent (N+2)/(N-2), where the system
degenerates to a single critical equation.  Exponents given as decimal
strings or integers are carried as exact rationals so that threshold
comparisons are exact; plain floats fall back to a fixed tolerance band.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

ExponentLike = Union[int, float, str, Fraction]

#: Width of the comparison band used when an exponent is only known as a float.
THRESHOLD_TOLERANCE = 1e-12


class InvalidExponent(ValueError):
    """Exponent pair violates the hyperbola constraints."""


def serrin_exponent(N: int) -> Fraction:
    """Threshold N/(N-2) separating the two decay regimes of U."""
    return Fraction(N, N - 2)


def sobolev_exponent(N: int) -> Fraction:
    """Critical exponent (N+2)/(N-2) of the scalar problem."""
    return Fraction(N + 2, N - 2)


class Regime(enum.Enum):
    """Position of p relative to the Serrin and Sobolev thresholds.

    Each supported regime carries the smallest dimension in which the
    reduced-energy construction applies.
    """

    SUPER_SERRIN = "super-serrin"        # N/(N-2) < p < (N+2)/(N-2)
    SOBOLEV_CRITICAL = "sobolev-critical"  # p = (N+2)/(N-2), hence q = p
    SUB_SERRIN = "sub-serrin"            # 1 < p < N/(N-2)
    UNSUPPORTED = "unsupported"

    @property
    def minimum_dimension(self) -> Optional[int]:
        return {
            Regime.SUPER_SERRIN: 8,
            Regime.SOBOLEV_CRITICAL: 10,
            Regime.SUB_SERRIN: 12,
        }.get(self)


def parse_exponent(value: ExponentLike) -> tuple[float, Optional[Fraction]]:
    """Return (float value, exact rational or None).

    Strings and integers parse exactly ("1.5" -> 3/2); Fractions pass
    through; floats are kept approximate since their decimal intent is
    ambiguous.
    """
    if isinstance(value, Fraction):
        return float(value), value
    if isinstance(value, bool):
        raise InvalidExponent("boolean is not an exponent")
    if isinstance(value, int):
        return float(value), Fraction(value)
    if isinstance(value, str):
        try:
            exact = Fraction(value)
        except ValueError as exc:
            raise InvalidExponent("cannot parse exponent %r" % value) from exc
        return float(exact), exact
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InvalidExponent("exponent must be finite")
        return value, None
    raise InvalidExponent("unsupported exponent type %r" % type(value))


def _compare(p: float, p_exact: Optional[Fraction], threshold: Fraction) -> int:
    """-1, 0, +1 for p below / at / above threshold.

    Exact rationals compare exactly; floats use THRESHOLD_TOLERANCE.
    """
    if p_exact is not None:
        if p_exact < threshold:
            return -1
        if p_exact > threshold:
            return 1
        return 0
    t = float(threshold)
    if abs(p - t) <= THRESHOLD_TOLERANCE:
        return 0
    return -1 if p < t else 1


def q_from_p(p: ExponentLike, N: int) -> float:
    """Partner exponent on the critical hyperbola.

    Solves 1/(q+1) = (N-2)/N - 1/(p+1).  Raises InvalidExponent when the
    constraints 1 < p <= (N+2)/(N-2) fail (so that q >= (N+2)/(N-2) holds).
    """
    return hyperbola_point(p, N).q


@dataclass(frozen=True)
class HyperbolaPoint:
    """An admissible exponent pair on the critical hyperbola."""

    p: float
    q: float
    N: int
    p_exact: Optional[Fraction] = None
    q_exact: Optional[Fraction] = None

    def __post_init__(self) -> None:
        if self.N < 3:
            raise InvalidExponent("dimension must be at least 3")
        gap = 1.0 / (self.p + 1.0) + 1.0 / (self.q + 1.0) - (self.N - 2.0) / self.N
        if abs(gap) > 1e-12:
            raise InvalidExponent(
                "pair (p, q) = (%r, %r) misses the hyperbola by %.3e"
                % (self.p, self.q, gap))
        if self.p_exact is not None and self.q_exact is not None:
            if Fraction(1, 1) / (self.p_exact + 1) + Fraction(1, 1) / (self.q_exact + 1) \
                    != Fraction(self.N - 2, self.N):
                raise InvalidExponent("exact pair misses the hyperbola")

    @property
    def regime(self) -> Regime:
        return classify_regime(self.p_exact if self.p_exact is not None else self.p,
                               self.N)


def hyperbola_point(p: ExponentLike, N: int) -> HyperbolaPoint:
    """Build the hyperbola point for a given p and dimension."""
    if int(N) != N or N < 3:
        raise InvalidExponent("dimension must be an integer >= 3")
    N = int(N)
    p_f, p_exact = parse_exponent(p)
    if p_f <= 1.0:
        raise InvalidExponent("need p > 1, got %r" % p_f)
    if _compare(p_f, p_exact, sobolev_exponent(N)) > 0:
        raise InvalidExponent(
            "p = %r exceeds the Sobolev exponent %s in dimension %d"
            % (p_f, sobolev_exponent(N), N))
    q_exact: Optional[Fraction] = None
    if p_exact is not None:
        inv = Fraction(N - 2, N) - Fraction(1, 1) / (p_exact + 1)
        if inv <= 0:
            raise InvalidExponent("no hyperbola partner for p = %s" % p_exact)
        q_exact = Fraction(1, 1) / inv - 1
        q_f = float(q_exact)
    else:
        inv = (N - 2.0) / N - 1.0 / (p_f + 1.0)
        if inv <= 0:
            raise InvalidExponent("no hyperbola partner for p = %r" % p_f)
        q_f = 1.0 / inv - 1.0
    return HyperbolaPoint(p=p_f, q=q_f, N=N, p_exact=p_exact, q_exact=q_exact)


def classify_regime(p: ExponentLike, N: int) -> Regime:
    """Classify an exponent against the Serrin and Sobolev thresholds.

    Returns UNSUPPORTED when p sits exactly at the Serrin exponent (the
    resonant case), when p is outside (1, (N+2)/(N-2)], or when the
    dimension is below the regime's minimum.
    """
    if int(N) != N or N < 3:
        return Regime.UNSUPPORTED
    N = int(N)
    p_f, p_exact = parse_exponent(p)
    if p_f <= 1.0:
        return Regime.UNSUPPORTED
    at_sobolev = _compare(p_f, p_exact, sobolev_exponent(N))
    if at_sobolev > 0:
        return Regime.UNSUPPORTED
    if at_sobolev == 0:
        return Regime.SOBOLEV_CRITICAL if N >= 10 else Regime.UNSUPPORTED
    at_serrin = _compare(p_f, p_exact, serrin_exponent(N))
    if at_serrin == 0:
        return Regime.UNSUPPORTED
    if at_serrin > 0:
        return Regime.SUPER_SERRIN if N >= 8 else Regime.UNSUPPORTED
    return Regime.SUB_SERRIN if N >= 12 else Regime.UNSUPPORTED


@dataclass(frozen=True)
class DecayRates:
    """Power-law rates r^rate (times log r when flagged) of the profile
    components and their first two radial derivatives."""

    u_rate: float
    u_log: bool
    v_rate: float
    v_log: bool
    du_rate: float
    du_log: bool
    dv_rate: float
    dv_log: bool
    ddu_rate: float
    ddu_log: bool
    ddv_rate: float
    ddv_log: bool


def decay_rates(p: ExponentLike, N: int) -> DecayRates:
    """Far-field decay of (U, V) for a given p.

    V always decays like r^{2-N}.  U decays like r^{2-N} above the Serrin
    exponent, like r^{2-N} log r at it, and like r^{2-(N-2)p} below it.
    Derivatives shift every rate down by one and keep the log flags.
    """
    if int(N) != N or N < 3:
        raise InvalidExponent("dimension must be an integer >= 3")
    N = int(N)
    p_f, p_exact = parse_exponent(p)
    if p_f <= 1.0:
        raise InvalidExponent("need p > 1")
    at_serrin = _compare(p_f, p_exact, serrin_exponent(N))
    if at_serrin > 0:
        u_rate, u_log = 2.0 - N, False
    elif at_serrin == 0:
        u_rate, u_log = 2.0 - N, True
    else:
        if p_exact is not None:
            u_rate = float(2 - (N - 2) * p_exact)
        else:
            u_rate = 2.0 - (N - 2.0) * p_f
        u_log = False
    v_rate = 2.0 - N
    return DecayRates(
        u_rate=u_rate, u_log=u_log,
        v_rate=v_rate, v_log=False,
        du_rate=u_rate - 1.0, du_log=u_log,
        dv_rate=v_rate - 1.0, dv_log=False,
        ddu_rate=u_rate - 2.0, ddu_log=u_log,
        ddv_rate=v_rate - 2.0, ddv_log=False,
    )
