"""Parameter construction and the squared-amplitude term family."""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mqsvis.specfun import LOG_ZERO, accumulate_ascending
from mqsvis.terms import (
    BeamSplitterParams,
    GainParams,
    gain_from_g,
    gain_from_mean,
    log_bs_coeff_sq,
    log_f_i,
    log_f_j,
    log_sq_gamma,
    log_sq_gamma_0j,
    log_sq_gamma_i0,
    splitter_from_reflectivity,
)


class TestGainParams:
    def test_mean_five(self, gain5):
        assert gain5.c2 == pytest.approx(6.0, rel=1e-15)
        assert gain5.z == pytest.approx(5.0 / 6.0, rel=1e-15)

    def test_mean_zero_degenerate(self):
        g0 = gain_from_mean(0.0)
        assert g0.c2 == 1.0
        assert g0.z == 0.0

    def test_from_g_roundtrip(self):
        g = gain_from_g(4.0)
        m = math.sinh(4.0) ** 2
        assert m == pytest.approx(744.7393, rel=1e-6)
        assert g.c2 == pytest.approx(1.0 + m, rel=1e-14)
        assert g.z == pytest.approx(m / (1.0 + m), rel=1e-14)
        same = gain_from_mean(m)
        assert same.c2 == pytest.approx(g.c2, rel=1e-14)
        assert same.z == pytest.approx(g.z, rel=1e-14)

    def test_negative_mean_rejected(self):
        with pytest.raises(ValueError):
            gain_from_mean(-0.01)

    @given(st.floats(min_value=0.0, max_value=1e6))
    def test_z_in_unit_interval(self, m):
        g = gain_from_mean(m)
        assert 0.0 <= g.z < 1.0
        assert g.c2 >= 1.0


class TestBeamSplitterParams:
    def test_probabilities_complement(self):
        bs = splitter_from_reflectivity(0.1)
        assert bs.reflectivity == pytest.approx(0.1, rel=1e-15)
        assert math.exp(bs.log_r) == pytest.approx(0.1, rel=1e-15)
        assert math.exp(bs.log_t) == pytest.approx(0.9, rel=1e-15)

    def test_bounds_enforced(self):
        with pytest.raises(ValueError):
            splitter_from_reflectivity(-0.1)
        with pytest.raises(ValueError):
            splitter_from_reflectivity(1.5)


class TestGammaSquared:
    def test_i0_first_two(self, gain5):
        assert log_sq_gamma_i0(0, gain5) == pytest.approx(math.log(1.0 / 36.0), rel=1e-14)
        assert log_sq_gamma_i0(1, gain5) == pytest.approx(math.log(5.0 / 144.0), rel=1e-14)

    def test_0j_first_two(self, gain5):
        assert log_sq_gamma_0j(0, gain5) == pytest.approx(math.log(1.0 / 36.0), rel=1e-14)
        assert log_sq_gamma_0j(1, gain5) == pytest.approx(math.log(5.0 / 432.0), rel=1e-14)

    def test_degenerate_gain_is_vacuum_indicator(self):
        g0 = gain_from_mean(0.0)
        assert log_sq_gamma_i0(0, g0) == 0.0
        assert log_sq_gamma_i0(1, g0) == LOG_ZERO
        assert log_sq_gamma_0j(3, g0) == LOG_ZERO

    def test_origin(self, gain5):
        assert log_sq_gamma(0, 0, gain5) == pytest.approx(math.log(1.0 / 36.0), rel=1e-14)

    def test_factorizes(self, gain5):
        # gamma2(i, j) * gamma2(0, 0) = gamma2(i, 0) * gamma2(0, j)
        for i, j in [(1, 1), (3, 2), (10, 7), (40, 25)]:
            lhs = log_sq_gamma(i, j, gain5) + log_sq_gamma(0, 0, gain5)
            rhs = log_sq_gamma(i, 0, gain5) + log_sq_gamma(0, j, gain5)
            assert lhs == pytest.approx(rhs, rel=1e-13, abs=1e-13)

    @given(st.integers(min_value=0, max_value=500), st.integers(min_value=0, max_value=500))
    def test_separable_assembly(self, i, j):
        g = gain_from_mean(5.0)
        want = 2.0 * g.log_c2 + log_sq_gamma_i0(i, g) + log_sq_gamma_0j(j, g)
        assert log_sq_gamma(i, j, g) == pytest.approx(want, abs=1e-13 * (1.0 + abs(want)))

    def test_normalization(self, gain5):
        logs = [log_sq_gamma(i, j, gain5) for i in range(201) for j in range(201)]
        total = math.exp(accumulate_ascending(sorted(logs)))
        assert total == pytest.approx(1.0, abs=1e-10)

    @given(st.integers(min_value=0, max_value=500))
    def test_i0_recurrence(self, i):
        # ratio gamma2(i+1,0)/gamma2(i,0) = z/4 * (2i+2)(2i+3)/(i+1)^2;
        # tolerance must scale with the log-factorial intermediates, since
        # the log difference cancels hundreds down to O(1)
        g = gain_from_mean(5.0)
        step = log_sq_gamma_i0(i + 1, g) - log_sq_gamma_i0(i, g)
        want = math.log(g.z / 4.0) + math.log((2 * i + 2) * (2 * i + 3)) - 2 * math.log(i + 1)
        from mqsvis.specfun import log_factorial
        assert step == pytest.approx(want, abs=1e-14 * (16.0 + log_factorial(2 * i + 3)))


class TestSplitterCoefficients:
    def test_zero_reflected(self, bs01):
        for n_tot in (1, 4, 9):
            assert log_bs_coeff_sq(0, n_tot, bs01) == pytest.approx(
                n_tot * math.log(0.9), rel=1e-14)

    def test_one_of_two(self, bs01):
        # C(2,1) R T = 2 * 0.1 * 0.9
        assert log_bs_coeff_sq(1, 2, bs01) == pytest.approx(math.log(0.18), rel=1e-14)

    def test_out_of_range(self, bs01):
        assert log_bs_coeff_sq(-1, 2, bs01) == LOG_ZERO
        assert log_bs_coeff_sq(3, 2, bs01) == LOG_ZERO

    @settings(max_examples=25)
    @given(st.integers(min_value=0, max_value=500))
    def test_binomial_completeness(self, n_tot):
        bs = splitter_from_reflectivity(0.1)
        logs = sorted(log_bs_coeff_sq(k, n_tot, bs) for k in range(n_tot + 1))
        assert math.exp(accumulate_ascending(logs)) == pytest.approx(1.0, rel=1e-12)


class TestOccupationTerms:
    def test_f_i_origin(self, gain5, bs01):
        # c2 * gamma2(0,0) * T = 6/36 * 0.9
        assert log_f_i(0, 0, gain5, bs01) == pytest.approx(math.log(0.15), rel=1e-14)

    def test_f_i_out_of_range(self, gain5, bs01):
        assert log_f_i(4, 1, gain5, bs01) == LOG_ZERO

    def test_f_i_weighted_edge(self, gain5, bs01):
        # weight (2i+1-n)^p kills the n = 2i+1 term for p >= 1
        assert log_f_i(3, 1, gain5, bs01, weight_exponent=1) == LOG_ZERO

    def test_f_j_origin(self, gain5, bs01):
        # c2 * gamma2(0,0) * T^0 = 1/6
        assert log_f_j(0, 0, gain5, bs01) == pytest.approx(math.log(1.0 / 6.0), rel=1e-14)

    def test_f_j_odd_occupation_vanishes(self, gain5, bs01):
        assert log_f_j(1, 0, gain5, bs01) == LOG_ZERO

    def test_f_j_marginal_over_all_occupations(self, gain5, bs01):
        # binomial completeness collapses the m_occ sum, the remaining
        # geometric-type series over j closes to 1/sqrt(c2) = 1/sqrt(6)
        logs = sorted(log_f_j(m_occ, j, gain5, bs01)
                      for j in range(301) for m_occ in range(2 * j + 1))
        total = math.exp(accumulate_ascending(logs))
        assert total == pytest.approx(1.0 / math.sqrt(6.0), abs=1e-10)

    def test_f_i_marginal_over_all_occupations(self, gain5, bs01):
        logs = sorted(log_f_i(n, i, gain5, bs01)
                      for i in range(301) for n in range(2 * i + 2))
        total = math.exp(accumulate_ascending(logs))
        assert total == pytest.approx(math.sqrt(6.0), abs=1e-9)

    def test_marginal_product_is_one(self, bs01):
        for m in (1.0, 5.0, 10.0):
            g = gain_from_mean(m)
            fa = math.exp(accumulate_ascending(sorted(
                log_f_i(n, i, g, bs01) for i in range(400) for n in range(2 * i + 2))))
            fb = math.exp(accumulate_ascending(sorted(
                log_f_j(mo, j, g, bs01) for j in range(400) for mo in range(2 * j + 1))))
            assert fa * fb == pytest.approx(1.0, abs=1e-10)

    def test_f_i_against_direct_product(self, gain5, bs01):
        with mp.workdps(40):
            for n, i in [(0, 0), (1, 1), (3, 5), (11, 20)]:
                want = (mp.mpf(6) * mp.exp(mp.mpf(log_sq_gamma_i0(i, gain5)))
                        * mp.binomial(2 * i + 1, n)
                        * mp.mpf('0.1') ** n * mp.mpf('0.9') ** (2 * i + 1 - n))
                got = log_f_i(n, i, gain5, bs01)
                assert got == pytest.approx(float(mp.log(want)), rel=1e-12)
