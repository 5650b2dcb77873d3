"""Dynamic-cutoff summation of the A/B/G series and table precomputation."""

import math

import mpmath as mp
import pytest

from mqsvis.series import (
    PrecisionConfig,
    precompute_tables,
    sum_A,
    sum_B,
    sum_dynamic,
    sum_fixed,
    sum_G,
    sum_Gbar,
    term_peak_index,
    theory_tables,
)
from mqsvis.specfun import LOG_ZERO
from mqsvis.terms import (
    gain_from_g,
    gain_from_mean,
    log_f_i,
    splitter_from_reflectivity,
)
from mqsvis.errors import ComputationError

GAIN4 = gain_from_g(4.0)


class TestPrecisionConfig:
    def test_defaults(self):
        prec = PrecisionConfig()
        assert prec.eps_rel == 1e-15
        assert prec.log_eps == pytest.approx(math.log(1e-15), rel=1e-15)

    def test_bounds(self):
        with pytest.raises(ValueError):
            PrecisionConfig(eps_rel=0.0)
        with pytest.raises(ValueError):
            PrecisionConfig(eps_rel=1.0)
        with pytest.raises(ValueError):
            PrecisionConfig(max_terms=0)


class TestSumDynamic:
    def test_geometric(self):
        res = sum_dynamic(lambda i: i * math.log(0.5), 0, PrecisionConfig())
        assert res.value == pytest.approx(2.0, rel=1e-14)
        assert res.first_index == 0

    def test_all_zero_is_degenerate(self):
        res = sum_dynamic(lambda i: LOG_ZERO, 0, PrecisionConfig())
        assert res.log_value == LOG_ZERO
        assert res.n_terms == 0

    def test_result_index_ordering(self):
        res = sum_dynamic(lambda i: -abs(i - 40) * 0.3, 0, PrecisionConfig())
        assert res.first_index <= res.peak_index <= res.last_index
        assert res.peak_index == 40

    def test_tail_term_below_eps_of_peak(self):
        prec = PrecisionConfig()
        term = lambda i: -abs(i - 40) * 0.3
        res = sum_dynamic(term, 0, prec)
        assert term(res.last_index + 1) - term(res.peak_index) < prec.log_eps

    def test_runaway_series_raises(self):
        with pytest.raises(ComputationError):
            sum_dynamic(lambda i: 0.0, 0, PrecisionConfig(max_terms=1000))


def _is_local_peak_within_one(n, idx, gain, bs):
    # log f_i is concave in i, so a discrete local max is the global one;
    # accept idx if some c in {idx-1, idx, idx+1} beats both neighbors
    start = n // 2

    def val(i):
        return log_f_i(n, i, gain, bs) if i >= start else -math.inf

    for c in (idx - 1, idx, idx + 1):
        if c < start:
            continue
        if val(c) >= val(c - 1) and val(c) >= val(c + 1):
            return True
    return False


class TestTermPeakIndex:
    @pytest.mark.parametrize("n", [0, 10, 100])
    def test_local_maximum_within_one(self, n, bs01):
        idx = term_peak_index(n, GAIN4, bs01)
        assert _is_local_peak_within_one(n, idx, GAIN4, bs01)

    def test_vanishing_reflectivity_high_gain(self):
        # tiny R does not pin the peak to floor(n/2) here: the slowly
        # decaying gain tail keeps pushing mass outward, e.g. the n = 0
        # peak sits near -1/(2 (ln z + 2 ln T)) ~ 371
        bs = splitter_from_reflectivity(1e-6)
        for n in (0, 5, 17, 80):
            idx = term_peak_index(n, GAIN4, bs)
            assert _is_local_peak_within_one(n, idx, GAIN4, bs)
        assert term_peak_index(0, GAIN4, bs) > 100

    def test_vanishing_reflectivity_pins_to_start_at_low_gain(self):
        # R -> 0 pins the peak to floor(n/2) only where the gain tail
        # decays fast and the boundary binomial jump C(2i+3,n)/C(2i+1,n)
        # stays tame; n = 5 already escapes (f(5,3)/f(5,2) ~ 2.2)
        bs = splitter_from_reflectivity(1e-6)
        low = gain_from_mean(0.1)
        for n in (0, 1, 4):
            idx = term_peak_index(n, low, bs)
            assert idx == n // 2
            assert _is_local_peak_within_one(n, idx, low, bs)
        assert _is_local_peak_within_one(5, term_peak_index(5, low, bs), low, bs)

    def test_degenerate_reflectivity_returns_start(self):
        bs = splitter_from_reflectivity(0.0)
        assert term_peak_index(11, GAIN4, bs) == 5

    def test_monotone_in_n(self, bs01):
        peaks = [term_peak_index(n, GAIN4, bs01) for n in range(201)]
        assert all(b >= a for a, b in zip(peaks, peaks[1:]))


class TestSumA:
    def test_matches_fixed_reference_and_term_count(self, bs01):
        prec = PrecisionConfig()
        res = sum_dynamic(lambda i: log_f_i(0, i, GAIN4, bs01), 0, prec)
        ref = sum_fixed(lambda i: log_f_i(0, i, GAIN4, bs01), 0, 2000)
        assert res.log_value == pytest.approx(ref.log_value, abs=1e-15)
        assert 120 <= res.n_terms <= 180

    def test_large_n_term_count(self, bs01):
        res = sum_A(100, GAIN4, bs01)
        assert 800 <= res.n_terms <= 1200

    def test_sum_over_n_closes_to_cg(self, gain5, bs01):
        total = 0.0
        n = 0
        while True:
            v = sum_A(n, gain5, bs01).value
            total += v
            if n > 4 and v < 1e-15:
                break
            n += 1
        assert total == pytest.approx(math.sqrt(6.0), abs=1e-10)

    def test_degenerate_gain(self, bs01):
        g0 = gain_from_mean(0.0)
        assert sum_A(0, g0, bs01).value == pytest.approx(0.9, rel=1e-14)
        assert sum_A(1, g0, bs01).value == pytest.approx(0.1, rel=1e-14)
        assert sum_A(2, g0, bs01).value == 0.0

    @pytest.mark.parametrize("n", [0, 1])
    def test_even_case_matches_hypergeometric(self, n, gain5, bs01):
        # A(2n) = x_n (2n+1) R^{2n} T 2F1(n+3/2, n+3/2; 3/2; T^2 z)
        with mp.workdps(40):
            z = mp.mpf(5) / 6
            c2 = mp.mpf(6)
            x_n = mp.factorial(2 * n + 1) / c2 / mp.factorial(n) ** 2 * (z / 4) ** n
            arg = mp.mpf('0.81') * z
            f21 = mp.hyp2f1(n + mp.mpf(3) / 2, n + mp.mpf(3) / 2, mp.mpf(3) / 2, arg)
            want = x_n * (2 * n + 1) * mp.mpf('0.01') ** n * mp.mpf('0.9') * f21
            got = sum_A(2 * n, gain5, bs01).value
            assert got == pytest.approx(float(want), rel=1e-13)

    def test_weighted_series_converges_later(self, gain5, bs01):
        plain = sum_A(6, gain5, bs01, weight_exponent=0)
        weighted = sum_A(6, gain5, bs01, weight_exponent=2)
        assert weighted.peak_index >= plain.peak_index
        assert weighted.last_index > plain.last_index


class TestSumB:
    def test_sum_over_m_closes_to_inverse_cg(self, gain5, bs01):
        total = 0.0
        m_occ = 0
        while True:
            v = sum_B(m_occ, gain5, bs01).value
            total += v
            if m_occ > 4 and v < 1e-15:
                break
            m_occ += 1
        assert total == pytest.approx(1.0 / math.sqrt(6.0), abs=1e-10)

    def test_degenerate_gain(self, bs01):
        g0 = gain_from_mean(0.0)
        assert sum_B(0, g0, bs01).value == pytest.approx(1.0, rel=1e-14)
        assert sum_B(1, g0, bs01).value == 0.0
        assert sum_B(2, g0, bs01).value == 0.0

    def test_start_index_floor(self, gain5, bs01):
        assert sum_B(1, gain5, bs01).first_index == 1
        assert sum_B(0, gain5, bs01).first_index == 0
        assert sum_B(4, gain5, bs01).first_index == 2


class TestSumG:
    def test_g_zero_index(self, gain5):
        assert sum_G(0, gain5).value == pytest.approx(math.sqrt(6.0), abs=1e-10)

    def test_gbar_zero_index(self, gain5):
        assert sum_Gbar(0, gain5).value == pytest.approx(1.0 / math.sqrt(6.0), abs=1e-10)

    def test_degenerate_gain(self):
        g0 = gain_from_mean(0.0)
        assert sum_G(0, g0).value == pytest.approx(1.0, rel=1e-14)
        assert sum_G(1, g0).value == 0.0


class TestDynamicVersusFixed:
    def test_all_n_up_to_200(self, bs01):
        prec = PrecisionConfig()
        for n in range(0, 201, 7):
            dyn = sum_A(n, GAIN4, bs01, prec=prec)
            fix = sum_fixed(lambda i, n=n: log_f_i(n, i, GAIN4, bs01), n // 2, 5000)
            assert dyn.log_value == pytest.approx(fix.log_value, abs=1e-14)
            assert dyn.n_terms < 5000


class TestPrecomputeTables:
    def test_degenerate_gain_table_extents(self, bs01):
        g0 = gain_from_mean(0.0)
        tables = precompute_tables(0, g0, bs01)
        assert tables.n_last == 1
        assert tables.m_last == 0
        assert tables.a[0] == pytest.approx(0.9, rel=1e-14)
        assert tables.a[1] == pytest.approx(0.1, rel=1e-14)
        assert tables.b[0] == pytest.approx(1.0, rel=1e-14)

    def test_tail_criterion(self, gain5, bs01):
        # the stored tail entry certifies the cutoff relative to the
        # threshold entry the table will be cut at
        prec = PrecisionConfig()
        tables = precompute_tables(2, gain5, bs01, prec=prec)
        assert tables.a[-1] < prec.eps_rel * tables.a[2]
        assert tables.b[-1] < prec.eps_rel * tables.b[2]

    def test_product_identity(self, gain5, bs01):
        tables = precompute_tables(2, gain5, bs01)
        assert math.fsum(tables.a) * math.fsum(tables.b) == pytest.approx(1.0, abs=1e-9)

    def test_covers_requested_range(self, gain5, bs01):
        tables = precompute_tables(37, gain5, bs01)
        assert tables.n_last >= 37
        assert tables.m_last >= 37

    def test_theory_tables_product(self, gain5):
        # tables are indexed by the pair labels (i, j); entry j carries
        # the even mode's 2j-photon mass, so every entry is live
        tables = theory_tables(3, gain5)
        assert math.fsum(tables.a) * math.fsum(tables.b) == pytest.approx(1.0, abs=1e-9)
        assert all(v > 0.0 for v in tables.b)
        assert tables.a[0] == pytest.approx(6.0 / 36.0, rel=1e-13)
        assert tables.b[1] == pytest.approx(6.0 * 5.0 / 432.0, rel=1e-13)
