"""Exponent bookkeeping: the critical hyperbola identity, regime
classification against a hand-derived table, and closed-form decay rates."""
import math
from fractions import Fraction

import pytest

from bubblelab import (InvalidExponent, Regime, classify_regime, decay_rates,
                       hyperbola_point, q_from_p, serrin_exponent,
                       sobolev_exponent)
from bubblelab.hyperbola import HyperbolaPoint, parse_exponent

# Hand-derived classification table: (p, N, regime).  Thresholds per
# dimension: Serrin N/(N-2) and Sobolev (N+2)/(N-2), so
#   N = 8:  4/3 and 5/3      N = 10: 5/4 and 3/2     N = 12: 6/5 and 7/5
#   N = 14: 7/6 and 4/3      N = 16: 8/7 and 9/7
# The regime needs N >= 8 above Serrin, N >= 10 at Sobolev, N >= 12 below
# Serrin; the Serrin exponent itself is always rejected (resonance).
REGIME_TABLE = [
    # dimension 8
    ("21/20", 8, "UNSUPPORTED"),       # below Serrin but N < 12
    ("7/6", 8, "UNSUPPORTED"),
    ("5/4", 8, "UNSUPPORTED"),
    ("4/3", 8, "UNSUPPORTED"),         # exactly Serrin: resonant
    ("27/20", 8, "SUPER_SERRIN"),
    ("7/5", 8, "SUPER_SERRIN"),
    ("3/2", 8, "SUPER_SERRIN"),
    ("8/5", 8, "SUPER_SERRIN"),
    ("33/20", 8, "SUPER_SERRIN"),
    ("5/3", 8, "UNSUPPORTED"),         # exactly Sobolev but N < 10
    # dimension 10
    ("21/20", 10, "UNSUPPORTED"),
    ("11/10", 10, "UNSUPPORTED"),
    ("6/5", 10, "UNSUPPORTED"),
    ("5/4", 10, "UNSUPPORTED"),        # exactly Serrin
    ("13/10", 10, "SUPER_SERRIN"),
    ("4/3", 10, "SUPER_SERRIN"),
    ("7/5", 10, "SUPER_SERRIN"),
    ("29/20", 10, "SUPER_SERRIN"),
    ("37/25", 10, "SUPER_SERRIN"),
    ("3/2", 10, "SOBOLEV_CRITICAL"),
    # dimension 12
    ("21/20", 12, "SUB_SERRIN"),
    ("11/10", 12, "SUB_SERRIN"),
    ("9/8", 12, "SUB_SERRIN"),
    ("23/20", 12, "SUB_SERRIN"),
    ("6/5", 12, "UNSUPPORTED"),        # exactly Serrin
    ("49/40", 12, "SUPER_SERRIN"),
    ("5/4", 12, "SUPER_SERRIN"),
    ("13/10", 12, "SUPER_SERRIN"),
    ("27/20", 12, "SUPER_SERRIN"),
    ("7/5", 12, "SOBOLEV_CRITICAL"),
    # dimension 14
    ("21/20", 14, "SUB_SERRIN"),
    ("11/10", 14, "SUB_SERRIN"),
    ("9/8", 14, "SUB_SERRIN"),
    ("23/20", 14, "SUB_SERRIN"),
    ("7/6", 14, "UNSUPPORTED"),        # exactly Serrin
    ("6/5", 14, "SUPER_SERRIN"),
    ("5/4", 14, "SUPER_SERRIN"),
    ("31/24", 14, "SUPER_SERRIN"),
    ("13/10", 14, "SUPER_SERRIN"),
    ("4/3", 14, "SOBOLEV_CRITICAL"),
    # dimension 16
    ("21/20", 16, "SUB_SERRIN"),
    ("11/10", 16, "SUB_SERRIN"),
    ("9/8", 16, "SUB_SERRIN"),
    ("8/7", 16, "UNSUPPORTED"),        # exactly Serrin
    ("23/20", 16, "SUPER_SERRIN"),
    ("7/6", 16, "SUPER_SERRIN"),
    ("6/5", 16, "SUPER_SERRIN"),
    ("5/4", 16, "SUPER_SERRIN"),
    ("14/11", 16, "SUPER_SERRIN"),
    ("9/7", 16, "SOBOLEV_CRITICAL"),
]


def test_regime_table_has_fifty_entries():
    assert len(REGIME_TABLE) == 50
    assert len(set(REGIME_TABLE)) == 50


@pytest.mark.parametrize("p_str,N,expected", REGIME_TABLE)
def test_classification_matches_hand_table(p_str, N, expected):
    assert classify_regime(p_str, N) is Regime[expected]


@pytest.mark.parametrize("p_str,N,expected", REGIME_TABLE)
def test_hyperbola_identity(p_str, N, expected):
    q = q_from_p(p_str, N)
    p = float(Fraction(p_str))
    gap = 1.0 / (p + 1.0) + 1.0 / (q + 1.0) - (N - 2.0) / N
    assert abs(gap) <= 1e-12
    assert q >= p - 1e-15          # p is the smaller exponent by convention


def test_thresholds_are_exact_rationals():
    assert serrin_exponent(8) == Fraction(4, 3)
    assert sobolev_exponent(8) == Fraction(5, 3)
    assert serrin_exponent(12) == Fraction(6, 5)
    assert sobolev_exponent(12) == Fraction(7, 5)


def test_equal_exponents_at_sobolev():
    # the hyperbola meets the diagonal exactly at the Sobolev exponent
    for N in (8, 10, 12, 14):
        p = sobolev_exponent(N)
        point = hyperbola_point(p, N)
        assert point.q_exact == p
        assert point.p == point.q


def test_partner_exponent_decreases_in_p():
    qs = [q_from_p(p, 10) for p in ("13/10", "27/20", "7/5", "29/20", "3/2")]
    assert all(a > b for a, b in zip(qs, qs[1:]))


def test_exact_rationals_carried_through():
    point = hyperbola_point("3/2", 8)
    assert point.p_exact == Fraction(3, 2)
    # 1/(q+1) = 3/4 - 2/5 = 7/20 -> q = 13/7
    assert point.q_exact == Fraction(13, 7)
    assert point.q == pytest.approx(13.0 / 7.0, rel=1e-16)


def test_float_exponent_near_threshold_uses_tolerance_band():
    # a float within the band of the Serrin threshold classifies as resonant
    serrin = float(Fraction(4, 3))
    assert classify_regime(serrin, 8) is Regime.UNSUPPORTED
    assert classify_regime(serrin + 1e-13, 8) is Regime.UNSUPPORTED
    assert classify_regime(serrin + 1e-9, 8) is Regime.SUPER_SERRIN


def test_minimum_dimension_per_regime():
    assert Regime.SUPER_SERRIN.minimum_dimension == 8
    assert Regime.SOBOLEV_CRITICAL.minimum_dimension == 10
    assert Regime.SUB_SERRIN.minimum_dimension == 12
    assert Regime.UNSUPPORTED.minimum_dimension is None


class TestInvalidExponents:
    def test_p_at_most_one(self):
        with pytest.raises(InvalidExponent):
            hyperbola_point("1", 8)
        with pytest.raises(InvalidExponent):
            hyperbola_point(0.5, 8)

    def test_p_above_sobolev(self):
        with pytest.raises(InvalidExponent):
            hyperbola_point(2.0, 8)

    def test_bad_dimension(self):
        with pytest.raises(InvalidExponent):
            hyperbola_point("3/2", 2)
        assert classify_regime("3/2", 2) is Regime.UNSUPPORTED

    def test_non_finite_and_garbage(self):
        with pytest.raises(InvalidExponent):
            hyperbola_point(float("nan"), 8)
        with pytest.raises(InvalidExponent):
            hyperbola_point("not-a-number", 8)
        with pytest.raises(InvalidExponent):
            hyperbola_point(True, 8)

    def test_constructor_rejects_off_hyperbola_pair(self):
        with pytest.raises(InvalidExponent):
            HyperbolaPoint(p=1.5, q=2.0, N=8)
        with pytest.raises(InvalidExponent):
            HyperbolaPoint(p=1.5, q=13.0 / 7.0, N=8,
                           p_exact=Fraction(3, 2), q_exact=Fraction(2, 1))


def test_parse_exponent_forms():
    assert parse_exponent("1.5") == (1.5, Fraction(3, 2))
    assert parse_exponent(Fraction(5, 3))[1] == Fraction(5, 3)
    assert parse_exponent(2)[1] == Fraction(2)
    assert parse_exponent(1.5) == (1.5, None)     # float intent is ambiguous


class TestDecayRates:
    def test_fast_decay_above_serrin(self):
        rates = decay_rates("3/2", 8)
        assert rates.u_rate == -6.0 and not rates.u_log
        assert rates.v_rate == -6.0 and not rates.v_log
        assert rates.du_rate == -7.0
        assert rates.ddv_rate == -8.0

    def test_logarithm_at_serrin(self):
        rates = decay_rates("4/3", 8)
        assert rates.u_rate == -6.0 and rates.u_log
        assert rates.v_rate == -6.0 and not rates.v_log
        assert rates.du_log and rates.ddu_log

    def test_slow_decay_below_serrin(self):
        rates = decay_rates("1.1", 12)
        # 2 - (N-2) p = 2 - 11 = -9, against r^{2-N} = r^{-10} for V
        assert rates.u_rate == pytest.approx(-9.0, abs=1e-14)
        assert rates.v_rate == -10.0
        assert not rates.u_log

    def test_rejects_bad_input(self):
        with pytest.raises(InvalidExponent):
            decay_rates("3/2", 2)
        with pytest.raises(InvalidExponent):
            decay_rates(1.0, 8)
