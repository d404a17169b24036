import math

import numpy as np
import pytest

from stablenoise import (
    CounterStream, HalfSpaceParam, Sphere, StableParams, TailSpec, as_sphere_points,
    chentsov_indicator, chentsov_levy, geodesic_distance, hemisphere_contains, ks_two_sample,
    make_innovation_sampler, north_pole, sample_stable, sphere_levy, symdiff_indicator,
)

O = north_pole(2)


def marks(alpha=1.5, seed=1):
    return make_innovation_sampler("exact-stable", StableParams(alpha, 1.0, 0.0), seed)


def at_angle(t):
    return np.array([math.sin(t), 0.0, math.cos(t)])


class TestHemisphere:
    def test_cases(self):
        m = at_angle(0.4)
        assert hemisphere_contains(m, m)
        assert hemisphere_contains(m, np.array([0.0, 1.0, 0.0]))
        assert not hemisphere_contains(m, -m)

    def test_vectorised(self):
        x = np.array([[0, 0, 1.0], [0, 0, -1.0], [1.0, 0, 0]])
        assert list(hemisphere_contains(O, x)) == [True, False, True]


class TestSymdiff:
    def test_same_point(self):
        z = np.random.default_rng(0).normal(size=(50, 3))
        s = as_sphere_points(z / np.linalg.norm(z, axis=1)[:, None])
        assert np.all(symdiff_indicator(O, O, s) == 0)

    def test_antipodal(self):
        rng = np.random.default_rng(1)
        z = rng.normal(size=(200, 3))
        s = z / np.linalg.norm(z, axis=1)[:, None]
        assert np.all(symdiff_indicator(O, -O, s) == 1)

    def test_mass_is_distance_over_pi(self):
        m = at_angle(math.pi / 3)
        s = Sphere(2).sample(CounterStream(2, "dirs"), np.zeros(10 ** 5, dtype=np.int64),
                             np.arange(10 ** 5))
        v = symdiff_indicator(O, m, s)
        se = math.sqrt(1 / 3 * (2 / 3) / v.size)
        assert abs(v.mean() - 1 / 3) <= 3 * se

    def test_sphere_rule_mass(self):
        m = at_angle(1.0)
        assert Sphere(2).integrate(lambda s: symdiff_indicator(O, m, s)) == pytest.approx(1 / math.pi, rel=2e-3)


class TestSphereLevy:
    def test_origin_is_zero(self):
        B = sphere_levy([O, at_angle(0.5)], 200.0, marks(), 3, 100)
        assert np.all(B[:, 0] == 0.0)

    def test_needs_symmetry(self):
        with pytest.raises(ValueError):
            sphere_levy([O], 10.0, make_innovation_sampler("exact-stable", StableParams(1.5, 1.0, 0.5), 1), 1)
        with pytest.raises(ValueError):
            sphere_levy([O], 10.0, make_innovation_sampler("pareto-tail", TailSpec(1.5, 1.0, 0.2), 1), 1)

    def test_unit_points(self):
        with pytest.raises(ValueError):
            sphere_levy([[0, 0, 2.0]], 10.0, marks(), 1)

    def test_marginal_law(self):
        m = at_angle(math.pi / 4)
        B = sphere_levy([m], 1000.0, marks(1.5, 1), 1, 50000)[:, 0]
        # control measure of H_O delta H_m is d / pi; the integrand is sqrt(pi)
        sigma = math.sqrt(math.pi) * (geodesic_distance(O, m) / math.pi) ** (1 / 1.5)
        ref = sample_stable(StableParams(1.5, sigma), 50000, CounterStream(1, "oracle"))
        assert ks_two_sample(B, ref)[1] > 0.01

    def test_joint_consistency(self):
        # adding a point does not change the values at the others
        a = sphere_levy([at_angle(0.3)], 300.0, marks(), 5, 50)
        b = sphere_levy([at_angle(0.3), at_angle(2.0)], 300.0, marks(), 5, 50)
        assert np.array_equal(a[:, 0], b[:, 0])


class TestChentsov:
    def test_indicator_cases(self):
        s = np.array([1.0, 0.0])
        assert chentsov_indicator([0.0, 0.0], HalfSpaceParam(s, 0.5)) == 0.0
        assert chentsov_indicator([-1.0, 0.0], HalfSpaceParam(s, 0.5)) == 0.0
        assert chentsov_indicator([2.0, 0.0], HalfSpaceParam(s, 1.0)) == 1.0
        rows = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 0.0, 3.0]])
        assert list(chentsov_indicator([2.0, 0.0], rows)) == [1.0, 0.0, 0.0]

    def test_param_validation(self):
        with pytest.raises(ValueError):
            HalfSpaceParam(np.array([1.0, 1.0]), 1.0)
        with pytest.raises(ValueError):
            HalfSpaceParam(np.array([1.0, 0.0]), 0.0)

    def test_origin_is_zero(self):
        B = chentsov_levy([[0.0, 0.0], [0.5, 0.5]], 200.0, marks(), 6, 100)
        assert np.all(B[:, 0] == 0.0)

    def test_joint_consistency(self):
        a = chentsov_levy([[0.4, 0.1]], 200.0, marks(), 7, 40)
        b = chentsov_levy([[0.4, 0.1], [2.5, 0.0]], 200.0, marks(), 7, 40)
        assert np.array_equal(a[:, 0], b[:, 0])

    def test_isotropy(self):
        B = chentsov_levy([[1.0, 0.0], [0.0, 1.0]], 500.0, marks(2.0, 8), 8, 20000)
        v = np.var(B, axis=0)
        assert v[0] == pytest.approx(v[1], rel=0.06)

    def test_bounded_domain(self):
        with pytest.raises(ValueError):
            chentsov_levy([[np.inf, 0.0]], 10.0, marks(), 1)
