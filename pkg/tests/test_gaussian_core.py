import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shepplab.errors import DomainError
from shepplab.gaussian_core import (
    HurstIndex,
    fbm_cov,
    fbm_cov_matrix,
    fgn_autocov,
    gumbel_cdf,
    hpow,
    log_normal_survival,
    normal_survival,
)

hursts = st.floats(0.01, 0.99)
times = st.floats(0.0, 50.0)


def mp_survival(u):
    return mpmath.erfc(mpmath.mpf(u) / mpmath.sqrt(2)) / 2


class TestHurstIndex:
    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5, math.nan, math.inf])
    def test_rejects_outside_open_interval(self, bad):
        with pytest.raises(DomainError):
            HurstIndex(bad)

    def test_regimes(self):
        assert HurstIndex(0.25).is_theorem_regime
        assert HurstIndex(0.5).is_brownian and not HurstIndex(0.5).is_short_range
        assert not HurstIndex(0.7).is_theorem_regime


class TestFbmCov:
    @pytest.mark.parametrize("h", [0.1, 0.25, 0.5, 0.9])
    def test_unit_variance_at_one(self, h):
        assert fbm_cov(1, 1, h) == 1.0

    def test_brownian_is_min(self):
        assert fbm_cov(2, 1, 0.5) == pytest.approx(1.0, abs=1e-15)

    def test_hand_value(self):
        assert fbm_cov(2, 1, 0.25) == pytest.approx(math.sqrt(2) / 2, abs=1e-7)

    def test_negative_time(self):
        with pytest.raises(DomainError):
            fbm_cov(-1, 1, 0.3)

    @given(times, times, hursts)
    def test_symmetric(self, t, s, h):
        assert fbm_cov(t, s, h) == fbm_cov(s, t, h)

    @given(times, hursts, st.floats(0.1, 10.0))
    def test_self_similarity(self, t, h, c):
        lhs = fbm_cov(c * t, c * t, h)
        rhs = c ** (2 * h) * fbm_cov(t, t, h)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)

    @given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=64), hursts)
    def test_psd(self, ts, h):
        eig = np.linalg.eigvalsh(fbm_cov_matrix(np.array(ts), h))
        assert eig.min() >= -1e-8 * max(eig.max(), 1e-300)

    def test_matrix_matches_scalar(self):
        t = np.array([0.0, 0.3, 1.0, 2.5])
        m = fbm_cov_matrix(t, 0.3)
        for i in range(4):
            for j in range(4):
                assert m[i, j] == pytest.approx(fbm_cov(t[i], t[j], 0.3), abs=1e-15)


class TestFgnAutocov:
    @pytest.mark.parametrize("h", [0.1, 0.5, 0.8])
    def test_lag_zero(self, h):
        assert fgn_autocov(0, h) == 1.0

    @pytest.mark.parametrize("k", [1, 2, 7, 100])
    def test_brownian_uncorrelated(self, k):
        assert fgn_autocov(k, 0.5) == pytest.approx(0.0, abs=1e-15)

    def test_hand_value(self):
        assert fgn_autocov(1, 0.25) == pytest.approx((math.sqrt(2) - 2) / 2, abs=1e-7)

    @given(st.integers(0, 10_000), hursts)
    def test_matches_covariance_difference(self, k, h):
        # Cov(B(k+1)-B(k), B(1)-B(0)) from the fBm covariance
        ref = fbm_cov(k + 1, 1, h) - fbm_cov(k, 1, h) - fbm_cov(k + 1, 0, h) + fbm_cov(k, 0, h)
        # the four-term reference itself cancels to about k^2H * eps
        assert fgn_autocov(k, h) == pytest.approx(ref, abs=1e-14 * (k + 1) ** (2 * h))

    @given(st.integers(1, 1000), st.floats(0.01, 0.49))
    def test_short_range_negative(self, k, h):
        assert fgn_autocov(k, h) < 0

    def test_array_matches_scalar(self):
        lags = np.arange(20)
        np.testing.assert_allclose(fgn_autocov(lags, 0.3), [fgn_autocov(int(k), 0.3) for k in lags],
                                   rtol=0, atol=1e-15)

    def test_negative_lag(self):
        with pytest.raises(DomainError):
            fgn_autocov(-1, 0.3)


class TestNormalSurvival:
    def test_half(self):
        assert normal_survival(0) == 0.5

    def test_hand_value(self):
        assert normal_survival(1.96) == pytest.approx(0.0249979, abs=1e-6)

    @given(st.floats(-8, 8))
    def test_complement(self, u):
        assert normal_survival(u) + normal_survival(-u) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("u", np.linspace(-8, 8, 33))
    def test_against_mpmath(self, u):
        assert normal_survival(u) == pytest.approx(float(mp_survival(u)), rel=1e-12)

    @pytest.mark.parametrize("u", [8.0, 8.01, 9.0, 12.0, 20.0, 30.0, 40.0])
    def test_log_form_deep_tail(self, u):
        assert log_normal_survival(u) == pytest.approx(float(mpmath.log(mp_survival(u))), rel=1e-9)

    def test_continuous_at_switch(self):
        lo, hi = normal_survival(8.0), normal_survival(np.nextafter(8.0, 9.0))
        assert hi <= lo and abs(hi - lo) / lo < 1e-12

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite(self, bad):
        with pytest.raises(DomainError):
            normal_survival(bad)
        with pytest.raises(DomainError):
            log_normal_survival(bad)

    @given(st.floats(-5, 40), st.floats(0.001, 5))
    def test_log_monotone(self, u, d):
        assert log_normal_survival(u + d) < log_normal_survival(u)


class TestGumbel:
    def test_zero(self):
        assert gumbel_cdf(0) == pytest.approx(math.exp(-1), abs=1e-7)

    def test_hand_value(self):
        assert gumbel_cdf(3) == pytest.approx(0.9514320, abs=1e-7)

    @given(st.floats(-20, 50), st.floats(1e-3, 10))
    def test_monotone(self, x, d):
        assert gumbel_cdf(x) <= gumbel_cdf(x + d)

    def test_vectorised(self):
        x = np.array([-1.0, 0.0, 3.0])
        np.testing.assert_allclose(gumbel_cdf(x), [gumbel_cdf(v) for v in x], rtol=1e-15)


def test_hpow_zero_and_value():
    assert hpow(0.0, 0.5) == 0.0
    assert hpow(4.0, 0.5) == pytest.approx(2.0, rel=1e-15)
    np.testing.assert_allclose(hpow(np.array([0.0, 9.0]), 0.5), [0.0, 3.0])
