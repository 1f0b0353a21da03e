import io
import math

import numpy as np
import pytest

from tvarlms.curves import closed_form
from tvarlms.errors import ValidationError
from tvarlms.local_stationary import local_covariance
from tvarlms.risk import (Scenario, StepRule, compare_estimators, deterministic_bias_oracle,
                          fsum_mean, monte_carlo_msem, msem_expansion_check, predicted_bias,
                          rate_fit, run_replicates, step_size_rule, taylor_coefficient,
                          centered_residual)
from tvarlms.rng import InnovationSpec

G = InnovationSpec()


@pytest.fixture(scope="module")
def quad():
    return closed_form("polynomial", {"coeffs": [[0.1], [0.2], [0.15]]})


class TestStepRule:

    def test_power_of_two(self):
        assert step_size_rule(2 ** 15, 1.0, 1.0) == pytest.approx(2.0 ** -10)

    def test_scaling(self):
        ratio = step_size_rule(400, 1.0, 0.7) / step_size_rule(1600, 1.0, 0.7)
        assert ratio == pytest.approx(4 ** (2 / 3))

    def test_large_beta_limit(self):
        assert step_size_rule(10 ** 6, 1e6, 1.0) == pytest.approx(1e-6, rel=1e-4)

    def test_validation(self):
        with pytest.raises(ValidationError):
            step_size_rule(0, 1.0, 1.0)
        with pytest.raises(ValidationError):
            StepRule("adaptive")


class TestScenario:

    def test_validation(self, quad):
        with pytest.raises(ValidationError):
            Scenario(quad, G, [5], [1.0], StepRule())
        with pytest.raises(ValidationError):
            Scenario(quad, G, [100], [0.0], StepRule())
        with pytest.raises(ValidationError):
            Scenario(quad, G, [100], [1.0], StepRule(), replicates=1)
        with pytest.raises(ValidationError):
            Scenario(quad, G, [100], [1.0], StepRule(), estimator="romberg")
        with pytest.raises(ValidationError):
            Scenario(quad, G, [100], [0.2], StepRule(), eta=0.3)


class TestMonteCarlo:

    def test_msem_identity(self, quad):
        sc = Scenario(quad, G, [500], [0.5, 1.0], StepRule("fixed", 0.1), replicates=300)
        for c in monte_carlo_msem(sc).cells:
            np.testing.assert_allclose(c.msem, c.cov + np.outer(c.bias, c.bias), atol=1e-10)
            assert np.trace(c.msem) == pytest.approx(c.bias @ c.bias + np.trace(c.cov),
                                                     abs=1e-10)
            assert np.linalg.eigvalsh(c.msem).min() >= -1e-12
            np.testing.assert_allclose(c.cov_unbiased, c.cov * 300 / 299)
            assert c.lp_risk[2] == pytest.approx(math.sqrt(np.trace(c.msem)))

    def test_worker_invariance(self, quad):
        sc = Scenario(quad, G, [200], [1.0], StepRule("fixed", 0.1), replicates=1100,
                      master_seed=9)
        a = monte_carlo_msem(sc, workers=1).cells[0]
        b = monte_carlo_msem(sc, workers=3).cells[0]
        np.testing.assert_array_equal(a.errors, b.errors)
        np.testing.assert_array_equal(a.msem, b.msem)

    def test_replicate_isolation(self, quad):
        full = run_replicates(quad, G, 100, [0.1], [100], 5, master_seed=2)[0.1]
        again = run_replicates(quad, G, 100, [0.1], [100], 3, master_seed=2)[0.1]
        np.testing.assert_array_equal(full[:, :3], again)

    def test_noise_free_transient(self):
        c = closed_form("constant", {"theta": [0.5]}, sigma=0.0)
        sc = Scenario(c, G, [50, 400], [1.0], StepRule("fixed", 0.5), replicates=2,
                      init="stationary")
        with pytest.raises(Exception):
            monte_carlo_msem(sc)  # sigma = 0 has no stationary law
        sc = Scenario(c, G, [50, 400], [1.0], StepRule("fixed", 0.5), replicates=2)
        cells = monte_carlo_msem(sc).cells
        # zero path: the estimate never moves from 0
        np.testing.assert_allclose([c.bias[0] for c in cells], [-0.5, -0.5])

    def test_fsum_mean_order_free(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((1000, 3)) * 1e8
        np.testing.assert_array_equal(fsum_mean(a), fsum_mean(a[::-1]))

    def test_csv_shape(self, quad):
        sc = Scenario(quad, G, [100, 200], [1.0], StepRule("fixed", 0.1), replicates=10)
        buf = io.StringIO()
        monte_carlo_msem(sc).to_csv(buf)
        rows = buf.getvalue().splitlines()
        assert len(rows) == 3 and rows[0].startswith("n,t,mu,estimator")


class TestRateFit:

    def test_exact_power_law(self):
        ns = np.array([2.0 ** k for k in range(8, 14)])
        fit = rate_fit(ns, 3.0 * ns ** -0.4)
        assert fit.slope == pytest.approx(-0.4, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0)

    def test_needs_points(self):
        with pytest.raises(ValidationError):
            rate_fit([1, 2, 4], [1, 1, 1])
        with pytest.raises(ValidationError):
            rate_fit([10, 11, 12, 13], [1, 1, 1, 1])

    def test_constant_floor(self):
        c = closed_form("constant", {"theta": [0.5]})
        ns = [1000, 2000, 4000, 8000]
        sc = Scenario(c, G, ns, [1.0], StepRule("fixed", 0.05), replicates=400)
        rep = monte_carlo_msem(sc)
        fit = rate_fit(ns, [cell.lp_risk[2] for cell in rep.cells])
        assert abs(fit.slope) < 0.1


class TestBiasOracle:

    def test_constant_zero(self):
        c = closed_form("constant", {"theta": [0.3, -0.2]})
        np.testing.assert_array_equal(deterministic_bias_oracle(c, 0.05, 500, 1.0), 0.0)

    def test_scalar_linear(self):
        c = closed_form("linear", {"intercept": [0.1], "slope": [0.3]})
        n, mu = 2000, 0.02
        s = local_covariance(c, 1.0).matrix[0, 0]
        want = -(0.3 / n) * (1 - (1 - mu * s) ** n) / (mu * s)
        assert deterministic_bias_oracle(c, mu, n, 1.0)[0] == pytest.approx(want, rel=1e-10)

    def test_predicted_bias_linear(self, quad):
        pb = predicted_bias(quad, 1.0, 0.01, 1000, taylor_coefficient(quad, 1.0), 1.0)
        S = local_covariance(quad, 1.0).matrix
        np.testing.assert_allclose(pb, -np.linalg.solve(S, quad.derivative(1.0)) / 10.0)


class TestExpansion:

    def test_constant_zero_bias(self):
        c = closed_form("constant", {"theta": [0.5]}, sigma=0.3)
        sc = Scenario(c, G, [4000], [1.0], StepRule("fixed", 0.02), replicates=600)
        e = msem_expansion_check(sc)[0]
        np.testing.assert_array_equal(e.predicted_bias, 0.0)
        # the residual O(mu) bias stays within a few standard errors at this scale
        assert abs(e.empirical_bias[0]) <= 4 * e.bias_stderr[0]
        assert set(e.remainder_scales) >= {"mu", "mun^-2beta"}

    def test_cov_halves_with_mu(self):
        c = closed_form("constant", {"theta": [0.5]})
        covs = []
        for mu in (0.04, 0.02):
            sc = Scenario(c, G, [int(200 / mu)], [1.0], StepRule("fixed", mu),
                          replicates=800, master_seed=3)
            covs.append(msem_expansion_check(sc)[0].empirical_cov[0, 0])
        assert covs[1] / covs[0] == pytest.approx(0.5, abs=0.1)

    def test_requires_nlms(self, quad):
        sc = Scenario(quad, G, [100], [1.0], StepRule(), estimator="romberg", gamma=0.5)
        with pytest.raises(ValidationError):
            msem_expansion_check(sc)


class TestCentering:

    def test_constant_reduces_to_plain(self):
        c = closed_form("constant", {"theta": [0.5]})
        sc = Scenario(c, G, [500], [1.0], StepRule("fixed", 0.05), replicates=50)
        r = centered_residual(sc)[0]
        assert r.centered == r.uncentered

    def test_centering_helps(self, quad):
        sc = Scenario(quad, G, [4000], [1.0], StepRule("fixed", 0.005), replicates=400)
        r = centered_residual(sc)[0]
        shift = np.linalg.norm(r.centering)
        assert shift > 3 * r.uncentered_stderr
        assert r.centered < r.uncentered

    def test_needs_derivative(self):
        c = closed_form("sqrt_cusp", {"base": [0.1], "coef": [0.2], "t0": 0.5})
        with pytest.raises(ValidationError):
            centered_residual(Scenario(c, G, [100], [0.5], StepRule()))


class TestCompare:

    def test_paired_seeds(self, quad):
        sc = Scenario(quad, G, [300], [1.0], StepRule("fixed", 0.1), replicates=40,
                      master_seed=6, gamma=0.5)
        cmp = compare_estimators(sc).cells[0]
        plain = monte_carlo_msem(sc).cells[0]
        np.testing.assert_array_equal(cmp.nlms.errors, plain.errors)
        half = Scenario(quad, G, [300], [1.0], StepRule("fixed", 0.05), replicates=40,
                        master_seed=6)
        low = monte_carlo_msem(half).cells[0].errors
        np.testing.assert_allclose(cmp.romberg.errors, (plain.errors - 0.5 * low) / 0.5,
                                   atol=1e-14)

    def test_variance_inflation_increases_with_gamma(self):
        c = closed_form("constant", {"theta": [0.5]})
        ratios = []
        for g in (0.1, 0.3, 0.5, 0.7, 0.9):
            sc = Scenario(c, G, [4000], [1.0], StepRule("fixed", 0.05), replicates=500,
                          master_seed=1, gamma=g)
            ratios.append(compare_estimators(sc).cells[0].ratio)
        assert all(b > a for a, b in zip(ratios, ratios[1:]))
        assert ratios[0] > 1

    def test_romberg_wins_on_smooth_curve(self, quad):
        ns = [8192, 16384]
        # a larger step makes the drift bias dominate, which extrapolation removes
        sc = Scenario(quad, G, ns, [1.0], StepRule("minimax", alpha=1.0, beta=2.0),
                      replicates=200, gamma=0.5)
        for cell in compare_estimators(sc).cells:
            assert cell.ratio + 3 * cell.ratio_stderr < 1

    def test_needs_gamma(self, quad):
        with pytest.raises(ValidationError):
            compare_estimators(Scenario(quad, G, [100], [1.0], StepRule()))
