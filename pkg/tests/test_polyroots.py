import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tvarlms.curves import coefficients_from_roots
from tvarlms.polyroots import aberth, ar_reciprocal_roots, companion, spectral_radius


class TestCompanion:

    def test_scalar(self):
        np.testing.assert_array_equal(companion([0.5]), [[0.5]])

    def test_layout(self):
        np.testing.assert_array_equal(companion([1.1, -0.3]), [[1.1, -0.3], [1.0, 0.0]])

    def test_zero_is_nilpotent_shift(self):
        A = companion([0.0, 0.0, 0.0])
        np.testing.assert_array_equal(A, np.eye(3, k=-1))
        np.testing.assert_array_equal(np.linalg.matrix_power(A, 3), 0.0)


class TestSpectralRadius:

    def test_examples(self):
        assert spectral_radius([0.5]) == pytest.approx(0.5, rel=1e-12)
        assert spectral_radius([1.1, -0.3]) == pytest.approx(0.6, rel=1e-10)
        assert spectral_radius([0.0, 0.0, 0.0]) == 0.0

    def test_trailing_zero_coefficients(self):
        assert spectral_radius([0.5, 0.0, 0.0]) == pytest.approx(0.5, rel=1e-12)

    @pytest.mark.parametrize("roots", [[0.5, 0.5], [0.5, 0.5, 0.5], [-0.7] * 4,
                                       [0.6j, -0.6j, 0.6j, -0.6j], [0.8, 0.8, 0.1]])
    def test_multiple_roots_exact(self, roots):
        theta = coefficients_from_roots(np.array(roots, dtype=complex))
        assert spectral_radius(theta) == pytest.approx(max(abs(np.array(roots))), rel=1e-12)

    def test_agrees_with_companion_eigenvalues(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            th = rng.uniform(-0.5, 0.5, rng.integers(1, 7))
            ref = np.max(np.abs(np.linalg.eigvals(companion(th))))
            assert spectral_radius(th) == pytest.approx(ref, rel=1e-8, abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-0.95, 0.95).filter(lambda v: abs(v) > 1e-3),
                    min_size=1, max_size=4),
           st.floats(0.0, 3.1))
    def test_factorable_polynomials(self, reals, angle):
        # reals plus optionally one conjugate pair built from the first modulus
        roots = np.array(reals, dtype=complex)
        if len(reals) >= 2:
            m = abs(reals[0])
            roots = np.concatenate(([m * np.exp(1j * angle), m * np.exp(-1j * angle)],
                                    roots[2:]))
        theta = coefficients_from_roots(roots)
        assert spectral_radius(theta) == pytest.approx(np.max(np.abs(roots)), rel=1e-8)


class TestAberth:

    def test_reports_convergence(self):
        roots, it, res, ok = aberth(np.array([1.0, -3.0, 2.0]))
        assert ok and res <= 1e-12 and it <= 200
        np.testing.assert_allclose(np.sort(roots.real), [1.0, 2.0], atol=1e-12)

    def test_reciprocal_roots_of_ar_polynomial(self):
        # 1 - 1.1 z + 0.3 z^2 has zeros 2 and 5/3
        lam = np.sort(np.abs(ar_reciprocal_roots([1.1, -0.3])))
        np.testing.assert_allclose(lam, [0.5, 0.6], rtol=1e-12)
