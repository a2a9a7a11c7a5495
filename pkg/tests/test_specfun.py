import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from threehalves import specfun as sf
from threehalves.exceptions import ConvergenceError, DomainError
from threehalves.specfun import HypSeriesCtrl, LogScaled

# Frozen oracle values: mpmath at 50 digits.  Parameters are the quarterly
# Kummer triple for b = a1 = 0.1028, gamma = 0.0137, y = 0.3, T = 0.25.
NU_HAT = 6.5036496350364963504
Z_Q = 86.47051447247686377
LNGAMMA_K = 7.5414701407264969803  # ln Gamma(a1/gamma)
PSI_7_5 = 1.9467574842460867881
LOG_I_6_5_200 = 196.32664828535792598
LOG_1F1_Q = 83.820706167275525191
HYP2F2_1122_1 = 1.3179021514544038949
LOG_2F2_Q = 79.50392870314300744
G_SMALL, H_SMALL = 0.32324091230322972819, -0.16610121194614549196
LOG_G_Q, LOG_NEG_H_Q = 84.820606844192344764, 84.766645223383635635


def rel(a, b):
    return abs(a - b) / abs(b)


class TestLogScaled:
    @given(st.floats(min_value=-1e300, max_value=1e300, allow_nan=False))
    def test_round_trip(self, x):
        assert LogScaled.from_real(x).to_real() == pytest.approx(x, rel=2e-13, abs=0)

    @given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
    def test_arithmetic_matches_floats(self, x, y):
        X, Y = LogScaled.from_real(x), LogScaled.from_real(y)
        assert (X * Y).to_real() == pytest.approx(x * y, rel=1e-13, abs=1e-300)
        assert (X + Y).to_real() == pytest.approx(x + y, rel=1e-12, abs=1e-12)
        assert (X - Y).to_real() == pytest.approx(x - y, rel=1e-12, abs=1e-12)

    def test_no_overflow_far_outside_float_range(self):
        big = LogScaled(1, 5000.0)
        small = LogScaled(1, -4990.0)
        assert (big * small).to_real() == pytest.approx(math.exp(10))
        assert (big + big).log_mag == pytest.approx(5000 + math.log(2))

    def test_signed_sum_cancels(self):
        a = LogScaled(1, 700.0)
        assert (a - a).sign == 0
        b = LogScaled(1, 2.0)
        assert sf.log_sum([b, LogScaled.from_real(3.0), -b]).to_real() == pytest.approx(3.0, rel=1e-14)

    def test_division_and_power(self):
        x = LogScaled.from_real(8.0)
        assert (x / 2).to_real() == pytest.approx(4.0)
        assert (x ** (1 / 3)).to_real() == pytest.approx(2.0)
        with pytest.raises(ZeroDivisionError):
            x / 0.0

    def test_bad_sign(self):
        with pytest.raises(ValueError):
            LogScaled(2, 0.0)


class TestCtrl:
    @pytest.mark.parametrize("kw", [{"max_terms": 0}, {"rel_tol": 0.0}, {"rel_tol": 1.0},
                                    {"consecutive_small": 1}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            HypSeriesCtrl(**kw)

    def test_defaults(self):
        c = HypSeriesCtrl()
        assert (c.max_terms, c.rel_tol, c.consecutive_small) == (10_000, 1e-14, 3)


class TestGammaFamily:
    def test_trivial(self):
        assert sf.ln_gamma(1.0) == 0.0
        assert sf.ln_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)), rel=1e-15)
        assert sf.digamma(1.0) == pytest.approx(-0.5772156649015329, rel=1e-15)
        assert sf.digamma(2.0) == pytest.approx(1 - 0.5772156649015329, rel=1e-15)

    def test_oracles(self):
        assert rel(sf.ln_gamma(0.1028 / 0.0137), LNGAMMA_K) < 1e-13
        assert rel(sf.digamma(7.5), PSI_7_5) < 1e-12

    @pytest.mark.parametrize("x", [1e-3, 0.37, 12.5, 1e3, 1e6])
    def test_ln_gamma_range(self, x):
        assert rel(sf.ln_gamma(x), float(mp.loggamma(x))) < 1e-13

    @given(st.floats(0.1, 100))
    def test_digamma_recurrence(self, x):
        assert abs(sf.digamma(x + 1) - sf.digamma(x) - 1 / x) <= 1e-12 * max(1.0, 1 / x)

    @pytest.mark.parametrize("f", [sf.ln_gamma, sf.digamma])
    @pytest.mark.parametrize("x", [0.0, -1.0, -2.5])
    def test_domain(self, f, x):
        with pytest.raises(DomainError):
            f(x)


class TestBessel:
    def test_trivial(self):
        v = sf.bessel_i_log(0, 0)
        assert (v.sign, v.log_mag) == (1, 0.0)
        assert sf.bessel_i_log(0.5, 1.0).to_real() == pytest.approx(
            math.sqrt(2 / math.pi) * math.sinh(1.0), rel=1e-14)

    def test_oracle(self):
        assert rel(sf.bessel_i_log(6.5, 200.0).log_mag, LOG_I_6_5_200) < 1e-11

    @pytest.mark.parametrize("nu,x", [(0.0, 1e4), (3.2, 0.01), (40.0, 1e-5), (6.5036, 2.0)])
    def test_against_mpmath(self, nu, x):
        ref = float(mp.log(mp.besseli(nu, x)))
        assert abs(sf.bessel_i_log(nu, x).log_mag - ref) <= 1e-11 * max(1.0, abs(ref))

    @settings(max_examples=60)
    @given(st.floats(0.5, 20), st.floats(0.1, 1e3))
    def test_recurrence(self, nu, x):
        lhs = sf.bessel_i_log(nu - 1, x) - sf.bessel_i_log(nu + 1, x)
        rhs = sf.bessel_i_log(nu, x) * (2 * nu / x)
        assert abs(lhs.log_mag - rhs.log_mag) <= 1e-9 + 1e-16 * abs(rhs.log_mag) * 100

    def test_domain(self):
        with pytest.raises(DomainError):
            sf.bessel_i_log(1.0, -1.0)
        with pytest.raises(DomainError):
            sf.bessel_i_log(-1.5, 1.0)

    @pytest.mark.parametrize("nu,x", [(-0.5, 0.3), (-0.5, 7.0), (-0.25, 1e3), (-3.0, 2.5)])
    def test_negative_orders(self, nu, x):
        ref = float(mp.log(mp.besseli(nu, x)))
        assert abs(sf.bessel_i_log(nu, x).log_mag - ref) <= 1e-12 * max(1.0, abs(ref))


class TestHyp1f1:
    def test_trivial(self):
        assert sf.hyp1f1_log(2.3, 4.1, 0.0).to_real() == 1.0
        assert sf.hyp1f1_log(1, 2, 1).to_real() == pytest.approx(math.e - 1, rel=1e-15)

    def test_quarterly_triple(self):
        v = sf.hyp1f1_log(NU_HAT, NU_HAT + 1, Z_Q)
        assert rel(v.log_mag, LOG_1F1_Q) < 1e-10
        assert not v.approx

    @pytest.mark.parametrize("a,b,z", [(0.3, 1.7, 10.0), (-2.5, 3.0, 5.0), (6.5, 7.5, 9.86),
                                       (7.0, 7.5, 250.0), (1.2, 2.2, 700.0), (2.0, 8.0, 1200.0)])
    def test_against_mpmath(self, a, b, z):
        ref = mp.hyp1f1(a, b, z)
        v = sf.hyp1f1_log(a, b, z)
        assert v.sign == (1 if ref > 0 else -1)
        assert abs(v.log_mag - float(mp.log(abs(ref)))) < 1e-12 * max(1, abs(float(mp.log(abs(ref)))))

    def test_terminating_polynomial(self):
        # a = -3 gives a cubic; z > 500 must not switch to the large-z branch
        assert sf.hyp1f1_log(-3, 2.0, 600.0).to_real() == pytest.approx(float(mp.hyp1f1(-3, 2, 600)), rel=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            sf.hyp1f1_log(1.0, -2.0, 1.0)

    def test_non_convergence(self):
        with pytest.raises(ConvergenceError):
            sf.hyp1f1_log(1.0, 2.0, 300.0, HypSeriesCtrl(max_terms=50))

    @settings(max_examples=40)
    @given(st.floats(0.1, 10), st.floats(0.5, 10), st.floats(0, 100))
    def test_kummer_transformation(self, a, b, z):
        lhs = sf.hyp1f1_log(a, b, z)
        with mp.workdps(60):
            rhs = mp.log(mp.e ** z * mp.hyp1f1(b - a, b, -z))
        assert abs(lhs.log_mag - float(rhs)) <= 1e-7

    @pytest.mark.parametrize("a,b,z", [(0.7, 1.9, 3.0), (2.0, 5.0, 12.0)])
    def test_kummer_own_negative_series(self, a, b, z):
        neg = sf.hyp1f1_log(b - a, b, -z)
        assert abs(sf.hyp1f1_log(a, b, z).log_mag - (z + neg.log_mag)) < 1e-9

    @settings(max_examples=40)
    @given(st.floats(0.2, 8), st.floats(0.5, 9), st.floats(0.5, 90))
    def test_contiguity_derivative(self, a, b, z):
        h = 1e-5 * z
        fd = (sf.hyp1f1_log(a, b, z + h).to_real() - sf.hyp1f1_log(a, b, z - h).to_real()) / (2 * h) \
            if z < 600 else None
        exact = sf.hyp1f1_log(a + 1, b + 1, z) * (a / b)
        assert abs(fd / exact.to_real() - 1) <= 1e-6


class TestHyp2f2:
    def test_trivial(self):
        assert sf.hyp2f2_log(1.3, 2.2, 0.7, 5.0, 0.0).to_real() == 1.0

    def test_brute_force(self):
        brute = math.fsum(1 / ((k + 1) ** 2 * math.factorial(k)) for k in range(40))
        assert sf.hyp2f2_log(1, 1, 2, 2, 1.0).to_real() == pytest.approx(brute, rel=1e-15)
        assert rel(brute, HYP2F2_1122_1) < 1e-15

    def test_oracle(self):
        assert rel(sf.hyp2f2_log(1, NU_HAT + 1, 2, NU_HAT + 2, Z_Q).log_mag, LOG_2F2_Q) < 1e-12


def _fd_param(which, a, b, z, h=1e-5):
    def f(x):
        aa, bb = (x, b) if which == "a" else (a, x)
        return sf.hyp1f1_log(aa, bb, z)

    x0 = a if which == "a" else b
    # log-domain central difference of F, Richardson over h and h/2
    def d(step):
        up, dn = f(x0 + step), f(x0 - step)
        return (up - dn).to_real() / (2 * step)

    return (4 * d(h / 2) - d(h)) / 3


class TestParameterDerivatives:
    def test_zero_argument(self):
        assert sf.hyp1f1_da(2.0, 3.0, 0.0).sign == 0
        assert sf.hyp1f1_db(2.0, 3.0, 0.0).sign == 0

    def test_small_oracle(self):
        assert rel(sf.hyp1f1_da(1, 2, 0.5).to_real(), G_SMALL) < 1e-12
        assert rel(sf.hyp1f1_db(1, 2, 0.5).to_real(), H_SMALL) < 1e-12
        assert rel(sf.hyp1f1_da(1, 2, 0.5).to_real(), _fd_param("a", 1, 2, 0.5)) < 1e-8
        assert rel(sf.hyp1f1_db(1, 2, 0.5).to_real(), _fd_param("b", 1, 2, 0.5)) < 1e-8

    def test_quarterly_oracle(self):
        g = sf.hyp1f1_da(NU_HAT, NU_HAT + 1, Z_Q)
        h = sf.hyp1f1_db(NU_HAT, NU_HAT + 1, Z_Q)
        assert g.sign == 1 and h.sign == -1
        assert abs(g.log_mag - LOG_G_Q) < 1e-12 * LOG_G_Q
        assert abs(h.log_mag - LOG_NEG_H_Q) < 1e-12 * LOG_NEG_H_Q

    @pytest.mark.parametrize("a", [0.5, 3.0, NU_HAT, 14.9])
    @pytest.mark.parametrize("b", [1.5, NU_HAT + 1, 16.2])
    @pytest.mark.parametrize("z", [0.5, 9.86, 30.0, Z_Q])
    def test_against_finite_differences(self, a, b, z):
        g, h = sf.hyp1f1_param_derivs(a, b, z)
        assert rel(g.to_real(), _fd_param("a", a, b, z)) <= 1e-7
        assert rel(h.to_real(), _fd_param("b", a, b, z)) <= 1e-7

    def test_large_z_branch_matches_mpmath(self):
        g, h = sf.hyp1f1_param_derivs(1.2, 2.2, 700.0)
        rg = mp.diff(lambda s: mp.hyp1f1(s, 2.2, 700), 1.2)
        rh = mp.diff(lambda s: mp.hyp1f1(1.2, s, 700), 2.2)
        assert abs(g.log_mag - float(mp.log(rg))) < 1e-12 * 700
        assert abs(h.log_mag - float(mp.log(-rh))) < 1e-12 * 700

    @pytest.mark.parametrize("a,b,z", [(NU_HAT, NU_HAT + 1, Z_Q), (1.33, 4.67, 9.86), (2.0, 3.0, 0.7)])
    def test_mixed_dz_against_contiguity(self, a, b, z):
        ga, hb = sf.hyp1f1_mixed_dz(a, b, z)
        # d/dz dF/da = F(a+1,b+1)/b + (a/b) G1(a+1, b+1)
        F1 = sf.hyp1f1_log(a + 1, b + 1, z)
        g1, h1 = sf.hyp1f1_param_derivs(a + 1, b + 1, z)
        ref_a = (F1 / b + g1 * (a / b)).to_real()
        ref_b = (F1 * (-a / b ** 2) + h1 * (a / b)).to_real()
        assert rel(ga.to_real(), ref_a) < 1e-12
        assert rel(hb.to_real(), ref_b) < 1e-12


class TestPochhammerWhittaker:
    def test_values(self):
        assert sf.pochhammer_log(3.7, 0).to_real() == 1.0
        assert sf.pochhammer_log(2, 3).to_real() == pytest.approx(24.0, rel=1e-15)
        assert sf.pochhammer_log(0.5, 5).to_real() == pytest.approx(29.53125, rel=1e-14)
        assert sf.pochhammer_log(-2.0, 5).sign == 0
        assert sf.pochhammer_log(-0.5, 1).sign == -1

    def test_bad_n(self):
        with pytest.raises(DomainError):
            sf.pochhammer_log(1.0, -1)

    @pytest.mark.parametrize("k,mu,z", [(0.3, 1.2, 2.0), (-1.0, 3.25, 15.0), (2.0, 0.75, 40.0)])
    def test_whittaker(self, k, mu, z):
        ref = mp.whitm(k, mu, z)
        got = sf.whittaker_m_log(k, mu, z)
        assert got.sign == (1 if ref > 0 else -1)
        assert abs(got.log_mag - float(mp.log(abs(ref)))) < 1e-12 * 40
        # both representations obey the same z-derivative
        h = 1e-5 * z
        fd = (sf.whittaker_m_log(k, mu, z + h).to_real() - sf.whittaker_m_log(k, mu, z - h).to_real()) / (2 * h)
        exact = float(mp.diff(lambda s: mp.whitm(k, mu, s), z))
        assert abs(fd / exact - 1) <= 1e-7


def test_vectorized_series_handles_many_terms():
    # needs > 256 terms: forces the doubling loop
    v = sf.hyp1f1_log(0.5, 1.5, 400.0)
    assert abs(v.log_mag - float(mp.log(mp.hyp1f1(0.5, 1.5, 400)))) < 1e-12 * 400
    assert np.isfinite(v.log_mag)
