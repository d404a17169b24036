import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stablenoise import (
    CellArray, FilterSpec, GridSpec, Kernel, constant, gaussian_bump, geometric_filter, identity_filter,
    lalpha_norm, lalpha_power, parse_kernel, phi_h, psi_h, tilde_psi_h, tilde_psi_h_c,
)
from stablenoise.grid import cell_integrals, filtered_cells


def grid1(h, lo, n):
    return GridSpec(h, (lo,), (n,))


class TestPsi:
    def test_constant(self):
        u = psi_h(constant(2.5, 2), GridSpec(0.3, (-2, 1), (4, 3)))
        assert np.allclose(u.values, 2.5)

    def test_linear_means(self):
        u = psi_h(parse_kernel("x", 1), grid1(0.5, 0, 2))
        assert np.allclose(u.values, [0.25, 0.75], atol=1e-15)

    def test_fractional_overlap(self):
        u = psi_h(parse_kernel("indicator(box(0,0.75))", 1), grid1(0.5, 0, 2))
        assert np.allclose(u.values, [1.0, 0.5], atol=1e-15)

    def test_quadratic_exact(self):
        # Gauss rules integrate polynomials exactly: mean of x^2 on [k h, (k+1) h)
        h = 0.4
        u = psi_h(parse_kernel("x*x", 1), grid1(h, -3, 6))
        k = np.arange(-3, 3)
        exact = h ** 2 * ((k + 1) ** 3 - k ** 3) / 3
        assert np.allclose(u.values, exact, rtol=1e-13)

    @given(st.floats(0.05, 2.0), st.floats(-3, 3), st.floats(0.1, 3))
    @settings(max_examples=25, deadline=None)
    def test_mass_conservation(self, h, a, w):
        f = parse_kernel(f"indicator(box({a!r},{a + w!r}))", 1)
        g = GridSpec.from_box(h, a, a + w)
        assert psi_h(f, g).values.sum() * h == pytest.approx(w, rel=1e-12, abs=1e-12)


class TestPhi:
    def test_zero(self):
        k = phi_h(CellArray(np.zeros(5), 0.2, (3,)))
        assert np.all(k(np.linspace(-1, 3, 41)) == 0)

    def test_lookup(self):
        k = phi_h(CellArray([1.0, -2.0, 3.0], 0.5, (-1,)))
        assert list(k(np.array([-0.5, -0.01, 0.0, 0.49, 0.5, 0.99, 1.0]))) == [1, 1, -2, -2, 3, 3, 0]

    @given(st.integers(1, 3), st.floats(0.05, 2.0), st.floats(0.3, 2.0), st.integers(0, 10 ** 6))
    @settings(max_examples=40, deadline=None)
    def test_inverse_and_norm(self, d, h, alpha, seed):
        rng = np.random.default_rng(seed)
        shape = tuple(rng.integers(1, 6, size=d))
        lo = tuple(rng.integers(-5, 5, size=d))
        u = CellArray(rng.standard_normal(shape), h, lo)
        back = psi_h(phi_h(u), u.grid)
        assert np.array_equal(back.values, u.values)
        closed = h ** d * np.sum(np.abs(u.values) ** alpha)
        assert phi_h(u).lalpha_power(alpha) == pytest.approx(closed, rel=1e-12)

    def test_norm_by_generic_quadrature(self):
        u = CellArray([0.5, -1.5, 2.0, 0.0], 0.25, (2,))
        k = phi_h(u)
        plain = Kernel(k.func, 1, k.support, None, k.breakpoints, False)
        generic = cell_integrals(plain, u.grid,
                                 transform=lambda v: np.abs(v) ** 1.3).sum()
        assert generic == pytest.approx(0.25 * np.sum(np.abs(u.values) ** 1.3), rel=1e-10)


class TestTildePsi:
    def test_step_function(self):
        k = tilde_psi_h(parse_kernel("x*indicator(box(0,1))", 1), grid1(0.5, 0, 2))
        assert np.allclose(k(np.array([0.1, 0.4, 0.6, 0.9])), [0.25, 0.25, 0.75, 0.75])

    def test_fixed_point(self):
        u = CellArray([1.0, 4.0, -2.0], 0.5, (0,))
        again = tilde_psi_h(phi_h(u), u.grid)
        assert np.array_equal(again.cells.values, u.values)

    def test_coarsening(self):
        fine = CellArray(np.arange(8.0), 0.25, (0,))
        coarse = psi_h(phi_h(fine), grid1(0.5, 0, 4))
        assert np.allclose(coarse.values, [0.5, 2.5, 4.5, 6.5])

    def test_convergence_in_lalpha(self):
        f = parse_kernel("exp(-x*x)", 1)
        errs = []
        for h in (0.4, 0.2, 0.1):
            g, _ = GridSpec.covering(f, h, 1.5)
            errs.append(lalpha_norm(tilde_psi_h(f, g) - f, 1.5))
        assert errs[0] > errs[1] > errs[2]
        assert errs[1] / errs[2] == pytest.approx(2.0, rel=0.1)    # first order


class TestFiltered:
    def test_identity(self):
        f = parse_kernel("exp(-x*x)", 1)
        g = grid1(0.25, -12, 24)
        a = tilde_psi_h(f, g)
        b = tilde_psi_h_c(f, identity_filter(), g)
        x = np.linspace(-3, 3, 101)
        assert np.array_equal(a(x), b(x))

    def test_brute_force(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal(7)
        c = rng.standard_normal(4)
        filt = FilterSpec(c, (-2,))
        out, lo = filtered_cells(a, (3,), filt)
        ref = {}
        for k in range(3, 10):
            for j in range(-2, 2):
                l = k - j
                ref[l] = ref.get(l, 0.0) + a[k - 3] * c[j + 2]
        labels = lo[0] + np.arange(out.size)
        for l, v in zip(labels, out):
            assert v == pytest.approx(ref.get(int(l), 0.0), abs=1e-13)

    def test_two_dimensional_brute_force(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((3, 4))
        c = rng.standard_normal((2, 3))
        out, lo = filtered_cells(a, (1, -1), FilterSpec(c, (0, -1)))
        for (i, j), v in np.ndenumerate(out):
            l = np.array([lo[0] + i, lo[1] + j])
            s = 0.0
            for (p, q), av in np.ndenumerate(a):
                jj = np.array([1 + p, -1 + q]) - l - np.array([0, -1])
                if 0 <= jj[0] < 2 and 0 <= jj[1] < 3:
                    s += av * c[jj[0], jj[1]]
            assert v == pytest.approx(s, abs=1e-12)

    def test_summable_limit(self):
        f = parse_kernel("exp(-x*x)", 1)
        filt = geometric_filter(0.5)
        errs = []
        for h in (0.2, 0.1, 0.05):
            g, _ = GridSpec.covering(f, h, 1.5)
            errs.append(lalpha_norm(tilde_psi_h_c(f, filt, g) - f * filt.C, 1.5))
        assert errs[0] > errs[1] > errs[2]

    def test_regime_mismatch(self):
        with pytest.raises(ValueError):
            tilde_psi_h_c(constant(1.0), identity_filter(), grid1(1.0, 0, 1), "regularly-varying")


class TestIntegrals:
    def test_gaussian_lalpha(self):
        f = gaussian_bump(1.0, 1)
        # int exp(-2 x^2) dx = sqrt(pi / 2)
        assert lalpha_power(f, 2.0) == pytest.approx(np.sqrt(np.pi / 2), rel=1e-9)

    def test_power_tail(self):
        f = parse_kernel("pow(1 + abs(x), -1)", 1)
        assert lalpha_power(f, 1.5) == pytest.approx(4.0, rel=1e-5)
