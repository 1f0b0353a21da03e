import numpy as np
import pytest

from tvarlms.curves import (closed_form, coefficients_from_roots, curve_eval,
                            curve_from_config, curve_from_roots, piecewise_linear,
                            root_trajectory)
from tvarlms.errors import DomainError, ValidationError
from tvarlms.tvar import check_stability_class


class TestCurveEval:

    def test_constant(self):
        th, sg = curve_eval(closed_form("constant", {"theta": [0.5]}), 0.3)
        np.testing.assert_array_equal(th, [0.5])
        assert sg == 1.0

    def test_piecewise_linear(self):
        # theta(1) = 1 is not stable, so the radius is declared rather than measured
        c = piecewise_linear([0.0, 1.0], [[0.0], [1.0]], sigma={"start": 1.0, "end": 2.0},
                             declared_rho=0.99)
        th, sg = curve_eval(c, 0.25)
        np.testing.assert_allclose(th, [0.25])
        assert sg == pytest.approx(1.25)

    def test_single_root(self):
        c = curve_from_roots([lambda ts: 0.5 * np.asarray(ts, dtype=complex)])
        np.testing.assert_allclose(c.theta(0.4), [0.2])

    @pytest.mark.parametrize("t", [-0.1, 1.0000001, float("nan")])
    def test_domain(self, t):
        with pytest.raises(DomainError):
            curve_eval(closed_form("constant", {"theta": [0.5]}), t)

    def test_deterministic(self):
        c = closed_form("cosine", {"amplitude": [0.4, -0.2]})
        np.testing.assert_array_equal(c.theta(0.37), c.theta(0.37))


class TestFamilies:

    def test_linear_derivative(self):
        c = closed_form("linear", {"intercept": [0.1], "slope": [0.3]})
        np.testing.assert_allclose(c.theta(1.0), [0.4])
        np.testing.assert_allclose(c.derivative(0.5), [0.3])

    def test_polynomial(self):
        c = closed_form("polynomial", {"coeffs": [[0.1], [0.2], [0.15]]})
        np.testing.assert_allclose(c.theta(1.0), [0.45])
        np.testing.assert_allclose(c.derivative(1.0), [0.5])

    def test_cosine_derivative_matches_difference(self):
        c = closed_form("cosine", {"amplitude": [0.45]})
        h = 1e-6
        fd = (c.theta(0.5 + h) - c.theta(0.5 - h)) / (2 * h)
        np.testing.assert_allclose(c.derivative(0.5), fd, rtol=1e-6)

    def test_cusp_has_no_derivative(self):
        c = closed_form("sqrt_cusp", {"base": [0.1], "coef": [0.2], "t0": 0.5})
        assert not c.has_derivative
        assert c.declared_beta == 0.5
        with pytest.raises(ValidationError):
            c.derivative(0.3)

    def test_measured_rho(self):
        c = closed_form("linear", {"intercept": [0.0], "slope": [0.9]})
        assert c.declared_rho == pytest.approx(0.9)

    def test_unstable_rejected(self):
        with pytest.raises(ValidationError):
            closed_form("constant", {"theta": [1.2]})

    def test_unknown_family(self):
        with pytest.raises(ValidationError):
            closed_form("spline", {})


class TestRoots:

    def test_constant_single_root(self):
        c = curve_from_roots(root_trajectory(0.7))
        np.testing.assert_allclose(c.theta_grid(np.linspace(0, 1, 5)), 0.7)

    def test_double_root(self):
        np.testing.assert_allclose(coefficients_from_roots([0.5, 0.5]), [1.0, -0.25])

    def test_conjugate_pair(self):
        lam = 0.5 * np.exp(1j * np.pi / 3)
        np.testing.assert_allclose(coefficients_from_roots([lam, np.conj(lam)]),
                                   [0.5, -0.25], atol=1e-15)

    def test_not_conjugate_closed(self):
        with pytest.raises(ValidationError):
            curve_from_roots([lambda ts: np.full(np.shape(ts), 0.5j)])

    def test_membership_by_construction(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            m0, m1 = rng.uniform(0, 0.9, 2)
            a0, a1 = rng.uniform(0.1, 3.0, 2)
            trajs = root_trajectory({"start": m0, "end": m1}, {"start": a0, "end": a1})
            trajs += root_trajectory(float(rng.uniform(-0.9, 0.9)))
            c = curve_from_roots(trajs, grid_size=65)
            assert check_stability_class(c, c.declared_rho, grid_size=65).member

    def test_double_root_membership(self):
        c = curve_from_roots(root_trajectory(0.5) * 2)
        assert c.declared_rho == 0.5
        rep = check_stability_class(c, 0.5, grid_size=9)
        assert rep.member and rep.worst_radius == pytest.approx(0.5, rel=1e-12)


class TestConfig:

    def test_closed_form(self):
        c = curve_from_config({"kind": "closed_form", "family": "linear",
                               "params": {"intercept": [0.1], "slope": [0.3]}, "sigma": 2.0})
        assert c.sigma(0.5) == 2.0 and c.d == 1

    def test_roots(self):
        c = curve_from_config({"kind": "roots", "roots": [{"modulus": 0.5, "angle": 1.0}],
                               "declared_rho": 0.6})
        assert c.d == 2 and c.declared_rho == 0.6

    def test_rho_below_roots_rejected(self):
        with pytest.raises(ValidationError):
            curve_from_config({"kind": "roots", "roots": [{"modulus": 0.5}],
                               "declared_rho": 0.4})

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            curve_from_config({"kind": "table"})
