import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.stats import levy_stable

from stablenoise import (
    Box, CounterStream, Euclidean, StableParams, TailSpec, char_distance, hill_estimator,
    integral_params, ks_two_sample, make_innovation_sampler, params_to_tail, parse_kernel, sample_stable,
    stable_abs_moment, stable_char_fn, tail_to_params,
)
from stablenoise.stable import cosine_moment_integral, sine_moment_integral


alphas = st.floats(0.2, 2.0)
skews = st.floats(-1.0, 1.0)


def params_strategy():
    return st.builds(
        lambda a, s, n: StableParams(a, s, 0.0 if a == 1.0 else n),
        alphas, st.floats(0.0, 5.0), skews)


class TestCharFn:
    def test_zero_theta(self):
        assert stable_char_fn(0.0, StableParams(1.3, 2.0, 0.5)) == 1 + 0j

    def test_gaussian_case(self):
        assert stable_char_fn(1.0, StableParams(2.0, 1.0)) == pytest.approx(math.exp(-1))

    def test_cauchy_case(self):
        assert stable_char_fn(-3.0, StableParams(1.0, 2.0, 0.0)) == pytest.approx(math.exp(-6))

    @given(params_strategy(), st.floats(-20, 20))
    def test_modulus_and_conjugate(self, p, theta):
        v = stable_char_fn(theta, p)
        assert abs(v) <= 1 + 1e-12
        assert stable_char_fn(-theta, p) == pytest.approx(np.conj(v), abs=1e-12)

    @given(st.floats(0.3, 1.9).filter(lambda a: abs(a - 1) > 1e-3), st.floats(0.1, 3),
           st.floats(0.1, 3), skews, st.floats(-4, 4))
    def test_convolution_closure(self, a, s1, s2, nu, theta):
        # the sum of independent S(s1, nu) and S(s2, nu) is S((s1^a + s2^a)^(1/a), nu)
        lhs = stable_char_fn(theta, StableParams(a, s1, nu)) * stable_char_fn(theta, StableParams(a, s2, nu))
        rhs = stable_char_fn(theta, StableParams(a, (s1 ** a + s2 ** a) ** (1 / a), nu))
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            StableParams(2.5, 1.0)
        with pytest.raises(ValueError):
            StableParams(1.5, -1.0)
        with pytest.raises(ValueError):
            StableParams(1.5, 1.0, 1.5)
        with pytest.raises(ValueError):
            StableParams(1.0, 1.0, 0.3)


class TestSampler:
    def test_degenerate_scale(self):
        x = sample_stable(StableParams(1.2, 0.0, 0.4), 1000, CounterStream(1, "s"))
        assert np.all(x == 0.0)

    def test_gaussian_variance(self):
        x = sample_stable(StableParams(2.0, 1.0), 10 ** 6, CounterStream(2, "s"))
        assert abs(np.var(x) - 2.0) <= 0.02

    def test_char_fn_agreement(self):
        p = StableParams(1.5, 1.0, 0.0)
        x = sample_stable(p, 10 ** 6, CounterStream(3, "s"))
        assert char_distance(x, p, (0.5, 1.0, 2.0)) <= 0.01

    @pytest.mark.parametrize("p", [StableParams(0.7, 1.0, 0.8), StableParams(1.3, 2.0, -0.5),
                                   StableParams(1.0, 0.5, 0.0), StableParams(1.8, 1.0, 1.0)])
    def test_skewed_char_fn(self, p):
        x = sample_stable(p, 2 * 10 ** 5, CounterStream(4, "s"))
        assert char_distance(x, p) <= 5 / math.sqrt(x.size)

    @pytest.mark.parametrize("p", [StableParams(1.5, 1.0, 0.4), StableParams(0.8, 2.0, -0.6)])
    def test_against_scipy(self, p):
        # scipy's S1 parametrization shares the char fn convention for alpha != 1
        ref = levy_stable.rvs(p.alpha, p.nu, scale=p.sigma, size=20000, random_state=11)
        x = sample_stable(p, 20000, CounterStream(6, "s"))
        assert ks_two_sample(x, ref)[1] > 0.01

    def test_reproducible(self):
        p = StableParams(1.1, 1.0, 0.2)
        a = sample_stable(p, 50, CounterStream(9, "x"))
        b = sample_stable(p, 50, CounterStream(9, "x"))
        c = sample_stable(p, 50, CounterStream(9, "y"))
        assert np.array_equal(a, b) and not np.array_equal(a, c)

    def test_total_skew_support(self):
        # alpha < 1 with nu = 1 is supported on the positive half line
        x = sample_stable(StableParams(0.6, 1.0, 1.0), 10 ** 4, CounterStream(5, "s"))
        assert np.all(x >= 0)


class TestTails:
    def test_symmetric_tails(self):
        assert tail_to_params(TailSpec(1.4, 0.7, 0.7)).nu == 0.0

    def test_half_alpha(self):
        p = tail_to_params(TailSpec(0.5, 0.5, 0.5))
        # oscillatory quadrature oracle; the closed form is sqrt(pi/2)
        i_s = integrate.quad(lambda t: math.sin(t) / math.sqrt(t), 0, 1)[0] + \
            integrate.quad(lambda t: t ** -0.5, 1, np.inf, weight="sin", wvar=1)[0]
        assert p.sigma == pytest.approx(i_s ** 2, rel=1e-9)
        assert p.sigma == pytest.approx(math.pi / 2, rel=1e-9)

    def test_one_sided(self):
        p = tail_to_params(TailSpec(1.5, 1.0, 0.0))
        assert abs(p.nu) <= 1.0
        expected = cosine_moment_integral(1.5) / (sine_moment_integral(1.5) * math.tan(0.75 * math.pi))
        assert p.nu == pytest.approx(expected)
        assert p.nu == pytest.approx(1.0, abs=1e-9)

    def test_moment_integrals_against_quadrature(self):
        a = 1.5
        s = integrate.quad(lambda t: t ** -a * math.sin(t), 0, 1)[0] + \
            integrate.quad(lambda t: t ** -a, 1, np.inf, weight="sin", wvar=1)[0]
        assert sine_moment_integral(a) == pytest.approx(s, rel=1e-8)

    @given(st.floats(0.3, 1.95).filter(lambda a: abs(a - 1) > 1e-2), st.floats(0.05, 3),
           st.floats(0.05, 3))
    @settings(max_examples=30, deadline=None)
    def test_round_trip(self, a, p, q):
        spec = TailSpec(a, p, q)
        back = params_to_tail(tail_to_params(spec))
        assert back.p == pytest.approx(p, rel=1e-8, abs=1e-10)
        assert back.q == pytest.approx(q, rel=1e-8, abs=1e-10)

    def test_alpha_one_requires_symmetry(self):
        with pytest.raises(ValueError):
            TailSpec(1.0, 1.0, 0.5)


class TestInnovations:
    def test_exact_mode_matches_sampler(self):
        G = make_innovation_sampler("exact-stable", StableParams(2.0, 1.0), 11)
        x = G.sample(10 ** 5)
        assert char_distance(x, StableParams(2.0, 1.0)) <= 5 / math.sqrt(x.size)

    def test_pareto_hill(self):
        G = make_innovation_sampler("pareto-tail", TailSpec(1.2, 1.0, 1.0), 12)
        x = G.sample(10 ** 6)
        assert abs(hill_estimator(x, 10 ** 4) - 1.2) <= 0.1

    def test_pareto_tail_constants(self):
        spec = TailSpec(1.5, 0.8, 0.2)
        G = make_innovation_sampler("pareto-tail", spec, 13)
        x = G.sample(10 ** 6)
        t = 30.0
        assert np.mean(x > t) * t ** 1.5 == pytest.approx(0.8, rel=0.1)
        assert np.mean(x < -t) * t ** 1.5 == pytest.approx(0.2, rel=0.2)
        assert abs(np.mean(x)) < 0.05          # centered for alpha > 1

    def test_determinism(self):
        G = make_innovation_sampler("pareto-tail", TailSpec(0.8, 0.5, 0.5), 5)
        keys = np.array([3, 17, -4])
        assert np.array_equal(G.draw([0, 4], keys), G.draw([0, 4], keys))
        assert np.array_equal(G.draw([0], keys)[:, 1:], G.draw([0], keys[1:]))

    def test_gaussian_mode(self):
        G = make_innovation_sampler("gaussian", StableParams(2.0, 1.5), 1)
        x = G.sample(10 ** 5)
        assert np.var(x) == pytest.approx(2 * 1.5 ** 2, rel=0.02)
        with pytest.raises(ValueError):
            make_innovation_sampler("gaussian", StableParams(1.5, 1.0), 1)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            make_innovation_sampler("uniform", StableParams(1.5, 1.0), 1)


class TestIntegralParams:
    def test_unit_indicator(self):
        f = parse_kernel("indicator(box(0,1))", 1)
        assert integral_params(f, Euclidean(1), 0.4, 1.5) == pytest.approx((1.0, 0.4))

    def test_homogeneity(self):
        f = parse_kernel("exp(-x*x)", 1)
        s, nu = integral_params(f, Euclidean(1), 0.3, 1.7)
        s3, nu3 = integral_params(f * 3.0, Euclidean(1), 0.3, 1.7)
        assert s3 == pytest.approx(3 * s, rel=1e-9)
        assert nu3 == pytest.approx(nu)

    def test_laplace_kernel(self):
        f = parse_kernel("exp(-abs(x))", 1)
        s, nu = integral_params(f, Euclidean(1), 1.0, 1.5)
        assert s == pytest.approx((2 / 1.5) ** (1 / 1.5), rel=1e-8)
        assert nu == pytest.approx(1.0)

    def test_sign_changes_skew(self):
        f = parse_kernel("indicator(box(0,1)) - indicator(box(1,2))", 1)
        s, nu = integral_params(f, Euclidean(1), 0.5, 1.5)
        assert s == pytest.approx(2 ** (1 / 1.5))
        assert nu == pytest.approx(0.0, abs=1e-12)

    def test_box_space(self):
        f = parse_kernel("x", 1)
        s, _ = integral_params(f, Box(0, 1), 0.0, 2.0)
        assert s == pytest.approx(math.sqrt(1 / 3))


def test_half_normal_moment():
    assert stable_abs_moment(2.0, 1.0) == pytest.approx(2 / math.sqrt(math.pi))
    x = sample_stable(StableParams(2.0, 1.0), 10 ** 7, CounterStream(0, "moment"))
    assert np.mean(np.abs(x)) == pytest.approx(2 / math.sqrt(math.pi), rel=2e-3)
