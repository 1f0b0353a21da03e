import io
import math

import numpy as np
import pytest

from tvarlms.curves import closed_form, curve_from_roots, root_trajectory
from tvarlms.engine import replicate_seed, run_block
from tvarlms.errors import ValidationError
from tvarlms.rng import InnovationSpec
from tvarlms.tvar import (check_replay, check_stability_class, curve_grids, radius_bounds,
                          lipschitz_seminorm, simulate, simulate_states)


@pytest.fixture
def ar2():
    return curve_from_roots(root_trajectory({"start": 0.3, "end": 0.8}, 0.7), sigma=1.3)


class TestStabilityClass:

    def test_constant_member(self):
        rep = check_stability_class(closed_form("constant", {"theta": [0.5]}), 0.6)
        assert rep.member and rep.worst_radius == pytest.approx(0.5)

    def test_linear_not_member(self):
        c = closed_form("linear", {"intercept": [0.0], "slope": [0.9]})
        rep = check_stability_class(c, 0.5)
        assert not rep.member and rep.worst_t == 1.0

    def test_grid_size_recorded(self, ar2):
        assert check_stability_class(ar2, 0.8, grid_size=33).grid_size == 33


class TestLipschitz:

    def test_constant(self):
        assert lipschitz_seminorm(closed_form("constant", {"theta": [0.3]}), 1.0) == 0.0

    def test_linear(self):
        c = closed_form("linear", {"intercept": [0.0], "slope": [0.7]})
        assert lipschitz_seminorm(c, 1.0, grid_size=101) == pytest.approx(0.7)

    def test_sqrt(self):
        c = closed_form("sqrt_cusp", {"base": [0.0], "coef": [1.0], "t0": 1.0},
                        declared_rho=0.99)
        # theta(u) = sqrt(1 - u); the sup over pairs touching u = 1 is 1
        assert lipschitz_seminorm(c, 0.5, grid_size=101) == pytest.approx(1.0)

    def test_beta_range(self):
        with pytest.raises(ValidationError):
            lipschitz_seminorm(closed_form("constant", {"theta": [0.3]}), 1.5)


class TestRadiusBounds:

    def test_examples(self):
        assert radius_bounds(0.5, 1) == pytest.approx((0.5, 0.5))
        a, b = radius_bounds(0.5, 2)
        assert a == pytest.approx(1 / math.sqrt(20)) and b == pytest.approx(1.25)

    def test_small_rho_limit(self):
        a, b = radius_bounds(1e-6, 1)
        assert a == pytest.approx(1e-6) and b == pytest.approx(1e-6)

    def test_inner_below_outer(self):
        for rho in (0.1, 0.5, 0.9):
            for d in range(1, 6):
                a, b = radius_bounds(rho, d)
                assert a <= b


class TestSimulate:

    def test_noise_free_zero(self):
        c = closed_form("constant", {"theta": [0.5]}, sigma=0.0)
        np.testing.assert_array_equal(simulate(c, 100, seed=1).samples, 0.0)

    def test_white_noise(self):
        c = closed_form("constant", {"theta": [0.0]}, sigma=2.0)
        p = simulate(c, 50, seed=4)
        np.testing.assert_array_equal(p.samples, 2.0 * p.innovations)

    def test_recursion_by_hand(self, ar2):
        p = simulate(ar2, 200, seed=9, init=[0.4, -1.0])
        ext = p.extended()
        for k in range(1, 201):
            th = ar2.theta((k - 1) / 200)
            lag = ext[k - 1 + 1], ext[k - 2 + 1]
            want = th[0] * lag[0] + th[1] * lag[1] + ar2.sigma(k / 200) * p.innovations[k - 1]
            assert p.samples[k - 1] == pytest.approx(want, abs=1e-13)

    def test_replay_bit_exact(self, ar2):
        p = simulate(ar2, 500, InnovationSpec("student_t", df=6.0), seed=2, init="stationary")
        assert check_replay(p, ar2)
        q = simulate(ar2, 500, InnovationSpec("student_t", df=6.0), seed=2, init="stationary")
        np.testing.assert_array_equal(p.samples, q.samples)

    def test_replay_detects_other_curve(self, ar2):
        p = simulate(ar2, 100, seed=2)
        other = curve_from_roots(root_trajectory(0.5, 0.7))
        assert not check_replay(p, other)

    def test_single_path_matches_batch(self, ar2):
        rows, sig = curve_grids(ar2, 300)
        seeds = [replicate_seed(5, 300, r) for r in range(7)]
        res = run_block(rows, sig, 300, InnovationSpec(), seeds, keep_path=True)
        for r, s in enumerate(seeds):
            np.testing.assert_array_equal(simulate(ar2, 300, seed=s).samples, res.samples[r])

    def test_validation(self, ar2):
        with pytest.raises(ValidationError):
            simulate(ar2, 0)
        with pytest.raises(ValidationError):
            simulate(ar2, 10, init="random")
        with pytest.raises(ValidationError):
            simulate(closed_form("constant", {"theta": [0.5]}, declared_rho=0.99), 10,
                     init=[1.0, 2.0])

    def test_stationary_needs_stable_start(self):
        c = closed_form("constant", {"theta": [1.0]}, declared_rho=0.99)
        with pytest.raises(ValidationError):
            simulate(c, 10, init="stationary")

    def test_csv(self):
        p = simulate(closed_form("constant", {"theta": [0.2]}), 3, seed=1)
        lines = io.StringIO()
        p.to_csv(lines)
        rows = lines.getvalue().splitlines()
        assert rows[0] == "k,x,eps" and len(rows) == 4
        assert float(rows[1].split(",")[1]) == p.samples[0]

    def test_zero_mean_across_replicates(self, ar2):
        X, _ = simulate_states(ar2, 400, InnovationSpec(), seed=3, replicates=500, k=250,
                               init="zero")
        x = X[:, 0]
        assert abs(x.mean()) <= 4 * x.std(ddof=1) / math.sqrt(500)
