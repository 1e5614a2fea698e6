import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from micma.errors import DomainError, InvalidMatrix
from micma.numerics import (
    Rng,
    chi2_ppf_1dof,
    draw_geometric,
    draw_standard_normal,
    expected_norm,
    jacobi_eig,
    normal_cdf,
    normal_ppf,
    sqrt_sym,
    sym_eig,
)

mpmath.mp.dps = 40


def bisect(f, lo, hi, target, iters=200):
    """Root of f(x) = target for increasing f on [lo, hi]."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def chi2_cdf_oracle(x):
    return float(2 * mpmath.ncdf(mpmath.sqrt(x)) - 1)


def random_symmetric(rng, n):
    a = rng.uniform(-1, 1, (n, n))
    return (a + a.T) / 2


class TestEigen:
    @pytest.mark.parametrize("method", ["lapack", "jacobi"])
    def test_identity(self, method):
        w, v = sym_eig(np.eye(3), method)
        np.testing.assert_allclose(w, [1, 1, 1], atol=1e-15)
        np.testing.assert_allclose(v.T @ v, np.eye(3), atol=1e-14)

    @pytest.mark.parametrize("method", ["lapack", "jacobi"])
    def test_diagonal(self, method):
        w, v = sym_eig(np.diag([4.0, 9.0]), method)
        np.testing.assert_allclose(w, [4, 9])
        np.testing.assert_allclose(np.abs(v), np.eye(2))

    @pytest.mark.parametrize("method", ["lapack", "jacobi"])
    def test_two_by_two(self, method):
        # characteristic polynomial (2 - l)^2 - 1 = 0
        w, _ = sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]), method)
        np.testing.assert_allclose(w, [1.0, 3.0], atol=1e-14)

    @pytest.mark.parametrize("seed", range(20))
    def test_jacobi_matches_lapack(self, seed):
        rng = np.random.default_rng(seed)
        m = random_symmetric(rng, int(rng.integers(1, 11)))
        wj, vj = jacobi_eig(m)
        wl, _ = sym_eig(m)
        np.testing.assert_allclose(wj, wl, atol=1e-12)
        assert np.linalg.norm(vj @ np.diag(wj) @ vj.T - m) <= 1e-10 * max(np.linalg.norm(m), 1)
        assert np.linalg.norm(vj.T @ vj - np.eye(len(m))) <= 1e-10

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidMatrix):
            sym_eig(np.array([[1.0, np.nan], [np.nan, 1.0]]))
        with pytest.raises(InvalidMatrix):
            jacobi_eig(np.array([[np.inf]]))

    def test_rejects_non_square(self):
        with pytest.raises(InvalidMatrix):
            sym_eig(np.ones((2, 3)))

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(1, 10), seed=st.integers(0, 2**32 - 1))
    def test_reconstruction_property(self, n, seed):
        m = random_symmetric(np.random.default_rng(seed), n)
        for method in ("lapack", "jacobi"):
            w, v = sym_eig(m, method)
            assert np.all(np.diff(w) >= 0)
            assert np.linalg.norm(v @ np.diag(w) @ v.T - m) <= 1e-9
            assert np.linalg.norm(v.T @ v - np.eye(n)) <= 1e-10


class TestSqrtSym:
    def test_diagonal(self):
        np.testing.assert_allclose(sqrt_sym(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-15)

    def test_identity(self):
        np.testing.assert_allclose(sqrt_sym(np.eye(4)), np.eye(4), atol=1e-15)

    def test_two_by_two(self):
        v = np.array([[1.0, 1.0], [-1.0, 1.0]]) / math.sqrt(2)
        expected = v @ np.diag([1.0, math.sqrt(3)]) @ v.T
        r = sqrt_sym(np.array([[2.0, 1.0], [1.0, 2.0]]))
        np.testing.assert_allclose(r, expected, atol=1e-14)
        assert np.array_equal(r, r.T)

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 8), seed=st.integers(0, 2**32 - 1))
    def test_square_property(self, n, seed):
        rng = np.random.default_rng(seed)
        a = rng.uniform(-1, 1, (n, n))
        m = a @ a.T + 1e-3 * np.eye(n)
        r = sqrt_sym(m)
        assert np.linalg.norm(r @ r - m) <= 1e-8 * np.linalg.norm(m)


class TestNormal:
    def test_cdf_values(self):
        assert normal_cdf(0.0) == 0.5
        assert normal_cdf(1.959964) == pytest.approx(float(mpmath.ncdf(1.959964)), abs=1e-12)
        assert normal_cdf(1.959964) == pytest.approx(0.975, abs=1e-6)
        assert normal_cdf(-8.0) == pytest.approx(6.22096e-16, rel=1e-5)

    @pytest.mark.parametrize("x", np.linspace(-8, 8, 33))
    def test_cdf_vs_mpmath(self, x):
        assert normal_cdf(x) == pytest.approx(float(mpmath.ncdf(x)), abs=1e-12)

    @settings(max_examples=200)
    @given(st.floats(-8, 8))
    def test_cdf_symmetry(self, x):
        assert abs(normal_cdf(x) + normal_cdf(-x) - 1.0) <= 1e-13

    def test_ppf_values(self):
        assert normal_ppf(0.5) == 0.0
        assert normal_ppf(0.75) == pytest.approx(bisect(normal_cdf, -10, 10, 0.75), abs=1e-9)
        assert normal_ppf(0.75) == pytest.approx(0.674490, abs=1e-6)
        assert normal_ppf(0.975) == pytest.approx(1.959964, abs=1e-6)

    @settings(max_examples=300)
    @given(st.floats(1e-300, 1 - 1e-16))
    def test_ppf_inverts_cdf(self, q):
        assert abs(normal_cdf(normal_ppf(q)) - q) <= 1e-10

    @pytest.mark.parametrize("q", [0.0, 1.0, -0.1, 1.5])
    def test_ppf_domain(self, q):
        with pytest.raises(DomainError):
            normal_ppf(q)


class TestChi2:
    def test_zero(self):
        assert chi2_ppf_1dof(0.0) == 0.0

    @pytest.mark.parametrize("q,expected", [(0.5, 0.454936), (0.9, 2.705543)])
    def test_against_bisection(self, q, expected):
        oracle = bisect(chi2_cdf_oracle, 0.0, 50.0, q, iters=100)
        assert chi2_ppf_1dof(q) == pytest.approx(oracle, abs=1e-9)
        assert chi2_ppf_1dof(q) == pytest.approx(expected, abs=1e-6)

    @settings(max_examples=200)
    @given(st.floats(1e-3, 5.0))
    def test_roundtrip(self, t):
        assert chi2_ppf_1dof(2 * normal_cdf(t) - 1) == pytest.approx(t * t, abs=1e-8)

    @settings(max_examples=200)
    @given(st.floats(1e-3, 6.0))
    def test_exact_for_rounded_input(self, t):
        # near t = 6 rounding q to a double already moves t^2 by ~1e-7,
        # so compare with the exact quantile of the rounded q instead
        q = float(2 * mpmath.ncdf(t) - 1)
        exact = mpmath.erfinv(mpmath.mpf(q)) ** 2 * 2
        assert chi2_ppf_1dof(q) == pytest.approx(float(exact), abs=1e-8)

    def test_strictly_increasing(self):
        qs = np.linspace(0, 0.999, 500)
        vals = [chi2_ppf_1dof(q) for q in qs]
        assert np.all(np.diff(vals) > 0)

    @pytest.mark.parametrize("q", [1.0, -0.01])
    def test_domain(self, q):
        with pytest.raises(DomainError):
            chi2_ppf_1dof(q)


class TestExpectedNorm:
    def test_n1(self):
        assert expected_norm(1) == 1 - 1 / 4 + 1 / 21
        assert expected_norm(1) == pytest.approx(0.797619, abs=1e-6)
        # exact value sqrt(2/pi) for comparison
        assert abs(expected_norm(1) - math.sqrt(2 / math.pi)) < 3e-4

    def test_n20(self):
        assert expected_norm(20) == pytest.approx(math.sqrt(20) * (1 - 1 / 80 + 1 / 8400), rel=1e-15)
        assert expected_norm(20) == pytest.approx(4.4167667, abs=1e-7)

    def test_large_limit(self):
        assert expected_norm(10**8) / math.sqrt(10**8) == pytest.approx(1.0, abs=1e-8)

    def test_zero_rejected(self):
        with pytest.raises(DomainError):
            expected_norm(0)


class TestRng:
    def test_normal_moments(self):
        x = draw_standard_normal(Rng(1), 10**6)
        assert abs(x.mean()) < 0.005
        assert abs(x.var() - 1) < 0.005

    def test_determinism(self):
        a = Rng(42)
        b = Rng(42)
        assert np.array_equal(draw_standard_normal(a, 50), draw_standard_normal(b, 50))
        assert [draw_geometric(a, 0.3) for _ in range(20)] == [draw_geometric(b, 0.3) for _ in range(20)]
        assert np.array_equal(a.signs(30), b.signs(30))

    def test_geometric_degenerate(self):
        rng = Rng(3)
        assert all(draw_geometric(rng, 1.0) == 0 for _ in range(100))

    def test_geometric_moments(self):
        rng = Rng(5)
        k = rng.geometric(0.5, 10**6)
        assert abs(k.mean() - 1.0) < 0.01
        k = rng.geometric(0.7, 10**6)
        assert abs(np.mean(k == 0) - 0.7) < 0.005
        assert k.min() == 0

    @pytest.mark.parametrize("p", [0.0, -0.2, 1.2])
    def test_geometric_domain(self, p):
        with pytest.raises(DomainError):
            draw_geometric(Rng(0), p)

    def test_seed_range(self):
        with pytest.raises(DomainError):
            Rng(-1)
        Rng(2**64 - 1)
