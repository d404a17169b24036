import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stablenoise import (
    CounterStream, ReplicaSet, StableParams, StudyThresholds, char_distance, convergence_study,
    empirical_char_fn, hill_estimator, ks_two_sample, operator_identity_suite, sample_stable,
)


def draws(alpha, n, seed, sigma=1.0, nu=0.0):
    return sample_stable(StableParams(alpha, sigma, nu), n, CounterStream(seed, "t"))


class TestReplicaSet:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            ReplicaSet([1.0, np.nan])

    def test_read_only(self):
        r = ReplicaSet([1.0, 2.0])
        with pytest.raises(ValueError):
            r.values[0] = 3.0


class TestCharFn:
    def test_at_zero(self):
        assert empirical_char_fn([1.0, -3.0, 5.0], [0.0])[0] == 1.0

    def test_point_mass(self):
        got = empirical_char_fn(np.full(10, 2.0), [0.5, 1.0])
        assert np.allclose(got, np.exp(1j * np.array([1.0, 2.0])))

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30), st.floats(-5, 5))
    @settings(max_examples=40)
    def test_modulus_at_most_one(self, xs, t):
        assert abs(empirical_char_fn(xs, [t])[0]) <= 1 + 1e-12


class TestCharDistance:
    def test_bounds(self):
        x = draws(1.5, 10 ** 5, 1)
        d = char_distance(x, StableParams(1.5, 1.0))
        assert 0 <= d <= 2
        # fluctuation scale is about n^(-1/2)
        assert d < 0.01

    def test_detects_wrong_index(self):
        x = draws(1.5, 10 ** 5, 2)
        assert char_distance(x, StableParams(1.2, 1.0)) > 0.02

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            char_distance([1.0, 2.0], StableParams(1.5, 1.0), [])


class TestKS:
    def test_same_sample(self):
        x = draws(1.5, 500, 3)
        s, p = ks_two_sample(x, x)
        assert s == 0.0 and p == pytest.approx(1.0)

    def test_scale_gap(self):
        a, b = draws(1.5, 20000, 4), draws(1.5, 20000, 5, sigma=1.1)
        assert ks_two_sample(a, b)[1] < 1e-4

    def test_null_calibration(self):
        # under the null the rejection rate at 5% stays near 5%
        p = [ks_two_sample(draws(1.2, 400, 2 * s), draws(1.2, 400, 2 * s + 1))[1] for s in range(200)]
        assert np.mean(np.array(p) < 0.05) < 0.1

    def test_small_sample(self):
        with pytest.raises(ValueError):
            ks_two_sample(np.zeros(10), np.zeros(500))


class TestHill:
    def test_pareto(self):
        u = np.random.default_rng(0).uniform(size=10 ** 6)
        x = u ** (-1 / 1.2)
        assert hill_estimator(x, 10 ** 4) == pytest.approx(1.2, abs=0.05)

    def test_stable_tail(self):
        assert hill_estimator(draws(1.5, 10 ** 6, 6), 2000) == pytest.approx(1.5, abs=0.15)

    def test_k_range(self):
        with pytest.raises(ValueError):
            hill_estimator(np.arange(1.0, 11.0), 10)
        with pytest.raises(ValueError):
            hill_estimator(np.arange(1.0, 11.0), 0)


class TestStudy:
    def test_degenerate_target(self):
        rep = convergence_study(lambda s: np.zeros(200), StableParams(1.5, 0.0), [1, 2], 200, 1)
        assert rep["pass"] and rep["ks"] == [0.0, 0.0]

    def test_shrinking_bias(self):
        params = StableParams(1.5, 1.0)

        def gen(step):
            return draws(1.5, 20000, 10 + step, sigma=1 + 0.3 / step)

        rep = convergence_study(gen, params, [1, 3, 100], 20000, 7)
        assert rep["ks_decreasing"] and rep["pass"]
        assert set(rep) >= {"schedule", "ks", "pvalues", "char_distance", "pass"}

    def test_persistent_bias_fails(self):
        rep = convergence_study(lambda s: draws(1.5, 20000, s, sigma=1.2), StableParams(1.5, 1.0),
                                [1, 2], 20000, 8)
        assert rep["final_rejected"] and not rep["pass"]

    def test_char_threshold(self):
        th = StudyThresholds(require_decrease="none", final_char_distance=1e-9)
        rep = convergence_study(lambda s: draws(1.5, 1000, s), StableParams(1.5, 1.0), [1, 2], 1000, 9,
                                thresholds=th)
        assert not rep["pass"]

    def test_needs_two_steps(self):
        with pytest.raises(ValueError):
            convergence_study(lambda s: np.zeros(200), StableParams(1.5, 1.0), [1], 200, 1)


def test_operator_suite():
    rep = operator_identity_suite(60, seed=3)
    assert rep["pass"] and rep["cases"] == 60
    assert rep["inverse_failures"] == 0
    assert rep["idempotence_max_rel_error"] <= 1e-10 and rep["norm_max_rel_error"] <= 1e-10
