"""Core q-arithmetic: values frozen from hand expansions and brute-force
partial products; identities as property tests."""

import math

import mpmath
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from qek.errors import NotConvergedError, PoleError
from qek.qcore import (
    DeformationParam,
    TruncationPolicy,
    q_factorial,
    q_gamma,
    q_pochhammer_alpha,
    q_pochhammer_inf,
    q_pochhammer_n,
    q_power,
    q_power_alpha,
)


def brute_pochhammer(a, q, terms):
    prod = 1.0
    for k in range(terms):
        prod *= 1.0 - a * q ** k
    return prod


def rel_err(x, ref):
    return abs(x - ref) / max(1.0, abs(ref))


class TestDeformationParam:
    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5, float("nan")])
    def test_rejects_out_of_range(self, bad):
        with pytest.raises(ValueError):
            DeformationParam(bad)

    def test_accepts_interior(self):
        assert DeformationParam(0.5).q == 0.5


class TestTruncationPolicy:
    def test_defaults(self):
        pol = TruncationPolicy()
        assert pol.rel_tol == 1e-14
        assert pol.max_terms == 100_000
        assert pol.consecutive_small == 3

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"rel_tol": 0.0},
            {"abs_tol": -1.0},
            {"max_terms": 0},
            {"consecutive_small": 0},
            {"max_terms": 2, "consecutive_small": 3},
        ],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            TruncationPolicy(**kwargs)


class TestPochhammerFinite:
    def test_empty_product(self):
        assert q_pochhammer_n(0.5, 0.5, 0) == 1.0

    def test_two_factors(self):
        assert q_pochhammer_n(0.5, 0.5, 2) == pytest.approx(0.375, rel=1e-15)

    def test_negative_subscript(self):
        # single reciprocal factor: 1 / (1 - 0.25/0.5)
        assert q_pochhammer_n(0.25, 0.5, -1) == pytest.approx(2.0, rel=1e-15)

    def test_negative_subscript_pole(self):
        # a = q^1 makes the k=1 reciprocal factor vanish
        with pytest.raises(ZeroDivisionError):
            q_pochhammer_n(0.5, 0.5, -1)

    @pytest.mark.parametrize("a", [-0.9, -0.5, 0.1, 0.5, 0.9])
    @pytest.mark.parametrize("q", [0.3, 0.6, 0.9])
    def test_telescoping_over_n_range(self, a, q):
        for n in range(-10, 31):
            try:
                left = q_pochhammer_n(a, q, n) * (1.0 - a * q ** n)
                right = q_pochhammer_n(a, q, n + 1)
            except ZeroDivisionError:
                continue
            assert left == pytest.approx(right, rel=1e-12)

    @given(
        a=st.floats(-2.0, 0.95),
        q=st.floats(0.05, 0.95),
        n=st.integers(-10, 30),
    )
    @settings(max_examples=200)
    def test_telescoping_property(self, a, q, n):
        if n < 0:
            factors = [1.0 - a * q ** (-k) for k in range(1, -n + 1)]
            assume(min(abs(f) for f in factors) > 1e-3)
        left = q_pochhammer_n(a, q, n) * (1.0 - a * q ** n)
        right = q_pochhammer_n(a, q, n + 1)
        assert left == pytest.approx(right, rel=1e-11, abs=1e-300)


class TestPochhammerInfinite:
    def test_zero_argument(self):
        res = q_pochhammer_inf(0.0, 0.5)
        assert res.value == 1.0
        assert res.converged

    def test_matches_brute_force_half(self):
        res = q_pochhammer_inf(0.5, 0.5)
        oracle = brute_pochhammer(0.5, 0.5, 200)
        assert res.value == pytest.approx(oracle, rel=1e-14)
        assert res.converged
        assert abs(res.value - oracle) <= res.tail_estimate + 1e-15

    def test_matches_brute_force_point_nine(self):
        res = q_pochhammer_inf(0.9, 0.9)
        oracle = brute_pochhammer(0.9, 0.9, 2000)
        assert res.value == pytest.approx(oracle, rel=1e-12)

    def test_terms_grow_like_log_tol_over_log_q(self):
        slow = q_pochhammer_inf(0.9, 0.9)
        fast = q_pochhammer_inf(0.5, 0.5)
        assert slow.terms_used > fast.terms_used
        # the stop index scales with log(tol)/log(q)
        expected = math.log(1e-14) / math.log(0.9)
        assert slow.terms_used == pytest.approx(expected, rel=0.2)

    def test_negative_a_all_factors_positive(self):
        res = q_pochhammer_inf(-0.9, 0.6)
        oracle = brute_pochhammer(-0.9, 0.6, 400)
        assert res.value == pytest.approx(oracle, rel=1e-13)

    def test_vanishing_factor_gives_exact_zero(self):
        # a = 1/q hits a zero factor at k = 1
        res = q_pochhammer_inf(2.0, 0.5)
        assert res.value == 0.0
        assert res.converged

    def test_not_converged_raises_with_partial(self):
        policy = TruncationPolicy(max_terms=10)
        with pytest.raises(NotConvergedError) as exc:
            q_pochhammer_inf(0.9, 0.99, policy)
        partial = exc.value.partial
        assert partial is not None
        assert not partial.converged
        assert partial.terms_used == 10

    @pytest.mark.parametrize("a", [-0.9, -0.5, 0.1, 0.5, 0.9])
    @pytest.mark.parametrize("q", [0.3, 0.6, 0.9])
    @pytest.mark.parametrize("n", [0, 1, 7, 23, 50])
    def test_finite_equals_ratio_of_infinite(self, a, q, n):
        finite = q_pochhammer_n(a, q, n)
        num = q_pochhammer_inf(a, q)
        den = q_pochhammer_inf(a * q ** n, q)
        assert finite == pytest.approx(num.value / den.value, rel=1e-12)

    def test_cross_check_mpmath(self):
        for a, q in [(0.5, 0.5), (-0.7, 0.8), (0.3, 0.9)]:
            res = q_pochhammer_inf(a, q)
            ref = float(mpmath.qp(a, q))
            assert res.value == pytest.approx(ref, rel=1e-12)


class TestPochhammerAlpha:
    def test_integer_alpha_matches_finite(self):
        res = q_pochhammer_alpha(0.3, 0.5, 2.0)
        assert res.value == pytest.approx(q_pochhammer_n(0.3, 0.5, 2), rel=1e-13)

    def test_alpha_zero_is_one(self):
        assert q_pochhammer_alpha(0.3, 0.5, 0.0).value == 1.0

    def test_fractional_alpha_two_product_oracle(self):
        res = q_pochhammer_alpha(0.3, 0.5, 1.5)
        oracle = brute_pochhammer(0.3, 0.5, 200) / brute_pochhammer(
            0.3 * 0.5 ** 1.5, 0.5, 200
        )
        assert res.value == pytest.approx(oracle, rel=1e-13)


class TestQGamma:
    def test_at_one_is_exactly_one(self):
        assert q_gamma(1.0, 0.5).value == 1.0

    def test_at_three_equals_one_plus_q(self):
        assert q_gamma(3.0, 0.5).value == pytest.approx(1.5, rel=1e-13)

    def test_classical_limit_of_factorial(self):
        # q -> 1- recovers 4! = 24; direct finite product as oracle
        q = 0.9999
        policy = TruncationPolicy(rel_tol=1e-12, max_terms=400_000)
        res = q_gamma(5.0, q, policy)
        oracle = 1.0
        for k in range(1, 5):
            oracle *= (1.0 - q ** k) / (1.0 - q)
        assert res.value == pytest.approx(oracle, rel=1e-7)
        assert abs(res.value - 24.0) < 2e-2

    @pytest.mark.parametrize("a", [0.0, -1.0, -2.0, -3.0 + 1e-13])
    def test_pole_detection(self, a):
        with pytest.raises(PoleError):
            q_gamma(a, 0.5)

    @pytest.mark.parametrize("q", [0.1, 0.5, 0.9])
    def test_functional_equation(self, q):
        for i in range(1, 21):
            x = 0.5 * i
            lhs = q_gamma(x + 1.0, q).value
            rhs = (1.0 - q ** x) / (1.0 - q) * q_gamma(x, q).value
            assert lhs == pytest.approx(rhs, rel=1e-11)

    def test_positivity_grid(self):
        for q in (0.1, 0.5, 0.9):
            for mu in (0.25, 0.5, 1.0, 2.5, 7.0):
                assert q_gamma(mu, q).value > 0.0
                for k in range(0, 8):
                    assert q_pochhammer_n(q ** mu, q, k) > 0.0

    def test_cross_check_mpmath(self):
        for a, q in [(2.5, 0.5), (4.0, 0.75), (0.7, 0.9)]:
            res = q_gamma(a, q)
            ref = float(mpmath.qgamma(a, q))
            assert res.value == pytest.approx(ref, rel=1e-12)


class TestQFactorial:
    def test_zero(self):
        assert q_factorial(0, 0.3) == 1.0

    def test_two(self):
        assert q_factorial(2, 0.5) == pytest.approx(1.5, rel=1e-15)

    def test_four_direct_product_oracle(self):
        oracle = 1.0 * 1.5 * 1.75 * 1.875
        assert q_factorial(4, 0.5) == pytest.approx(oracle, rel=1e-15)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            q_factorial(-1, 0.5)

    @pytest.mark.parametrize("q", [0.2, 0.5, 0.8])
    def test_matches_q_gamma(self, q):
        for n in range(0, 12):
            gam = q_gamma(n + 1.0, q)
            assert q_factorial(n, q) == pytest.approx(gam.value, rel=1e-12)


class TestQPower:
    def test_empty(self):
        assert q_power(2.0, 1.0, 0.5, 0) == 1.0

    def test_two_factors(self):
        assert q_power(2.0, 1.0, 0.5, 2) == pytest.approx(1.5, rel=1e-15)

    def test_vanishing_first_factor(self):
        assert q_power(1.0, 1.0, 0.5, 3) == 0.0

    def test_alpha_integer_consistency(self):
        res = q_power_alpha(2.0, 1.0, 0.5, 2.0)
        assert res.value == pytest.approx(q_power(2.0, 1.0, 0.5, 2), rel=1e-13)

    def test_alpha_zero_base(self):
        res = q_power_alpha(3.0, 0.0, 0.5, 1.5)
        assert res.value == pytest.approx(3.0 ** 1.5, rel=1e-15)

    def test_alpha_half_two_product_oracle(self):
        res = q_power_alpha(2.0, 1.0, 0.5, 0.5)
        oracle = 2.0 ** 0.5 * (
            brute_pochhammer(0.5, 0.5, 200)
            / brute_pochhammer(0.5 ** 1.5, 0.5, 200)
        )
        assert res.value == pytest.approx(oracle, rel=1e-13)

    def test_rejects_nonpositive_t(self):
        with pytest.raises(ValueError):
            q_power_alpha(0.0, 1.0, 0.5, 0.5)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, 2.0, 5.0])
    @pytest.mark.parametrize("t,a,q", [(2.0, 1.0, 0.5), (1.5, -0.7, 0.3), (3.0, 0.2, 0.9)])
    def test_integer_alpha_grid(self, alpha, t, a, q):
        res = q_power_alpha(t, a, q, alpha)
        ref = q_power(t, a, q, int(alpha))
        assert res.value == pytest.approx(ref, rel=1e-13)
