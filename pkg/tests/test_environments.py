import numpy as np
import pytest

from obliquetd.environments import (
    MC_GOAL_POSITION,
    RandomMDPSpec,
    build_baird,
    build_random_mdp,
    energy_pumping_policy,
    fourier_features,
    mountain_car_features,
    mountain_car_step,
)
from obliquetd.mdp import induce_chain, stationary_distribution, true_value
from obliquetd.metrics import EvaluationContext, mse


class TestBaird:
    def test_target_chain_sends_everything_to_hub(self):
        dom = build_baird()
        chain = induce_chain(dom.mdp, dom.target)
        expected = np.zeros((7, 7))
        expected[:, 6] = 1.0
        np.testing.assert_array_equal(chain.p_pi, expected)

    def test_importance_ratios(self):
        dom = build_baird()
        rho = dom.target.probs / dom.behavior.probs
        np.testing.assert_allclose(rho[:, 0], 7.0)  # solid
        np.testing.assert_allclose(dom.target.probs[:, 1], 0.0)  # dash never taken

    def test_true_value_zero_and_mse_at_zero_weights(self):
        dom = build_baird()
        chain_t = induce_chain(dom.mdp, dom.target)
        np.testing.assert_allclose(true_value(chain_t), 0.0, atol=1e-12)
        xi = stationary_distribution(induce_chain(dom.mdp, dom.behavior).p_pi)
        ctx = EvaluationContext.tabular(chain_t, xi, dom.features)
        assert mse(np.zeros(8), ctx) == pytest.approx(0.0, abs=1e-14)

    def test_features_are_overcomplete(self):
        dom = build_baird()
        phi = dom.features.matrix
        assert phi.shape == (7, 8)
        assert np.linalg.matrix_rank(phi) == 7

    def test_initial_weights(self):
        dom = build_baird()
        np.testing.assert_array_equal(dom.theta0, [1, 1, 1, 1, 1, 1, 10, 1])

    def test_behavior_rows_sum_to_one(self):
        dom = build_baird()
        np.testing.assert_allclose(dom.behavior.probs.sum(axis=1), 1.0, atol=1e-15)

    def test_mse_reduces_to_weighted_value_norm(self):
        # V is identically zero, so the error of any theta is just ||Phi theta||_xi^2
        dom = build_baird()
        chain_t = induce_chain(dom.mdp, dom.target)
        xi = stationary_distribution(induce_chain(dom.mdp, dom.behavior).p_pi)
        ctx = EvaluationContext.tabular(chain_t, xi, dom.features)
        rng = np.random.default_rng(0)
        for _ in range(5):
            theta = rng.normal(size=8)
            v_hat = dom.features.matrix @ theta
            assert mse(theta, ctx) == pytest.approx(float(xi.xi @ v_hat**2), abs=1e-12)


class TestRandomMDP:
    def test_strictly_positive_kernel(self):
        dom = build_random_mdp(RandomMDPSpec(n_states=20, n_actions=4, n_features=6, seed=1))
        assert dom.mdp.transition.min() > 0.0

    def test_constant_feature_column(self):
        dom = build_random_mdp(RandomMDPSpec(n_states=15, n_actions=3, n_features=7, seed=2))
        np.testing.assert_array_equal(dom.features.matrix[:, -1], 1.0)
        assert dom.features.matrix.shape == (15, 7)

    def test_seed_determinism_and_distinctness(self):
        spec = RandomMDPSpec(n_states=12, n_actions=3, n_features=5, seed=9)
        a = build_random_mdp(spec)
        b = build_random_mdp(spec)
        np.testing.assert_array_equal(a.mdp.transition, b.mdp.transition)
        np.testing.assert_array_equal(a.features.matrix, b.features.matrix)
        np.testing.assert_array_equal(a.start.xi, b.start.xi)
        c = build_random_mdp(RandomMDPSpec(n_states=12, n_actions=3, n_features=5, seed=10))
        assert not np.array_equal(a.mdp.transition, c.mdp.transition)

    def test_behavior_chain_is_ergodic(self):
        dom = build_random_mdp(RandomMDPSpec(n_states=25, n_actions=4, n_features=6, seed=3))
        chain = induce_chain(dom.mdp, dom.behavior)
        xi = stationary_distribution(chain.p_pi)
        assert np.max(np.abs(xi.xi @ chain.p_pi - xi.xi)) < 1e-10


class TestMountainCar:
    def test_rest_coast_changes_velocity_by_gravity_only(self):
        for pos in (-0.5, -0.9, 0.2):
            (p2, v2), r, done = mountain_car_step((pos, 0.0), 1)
            assert v2 == pytest.approx(-0.0025 * np.cos(3.0 * pos))
            assert r == -1.0

    def test_goal_predicate(self):
        (p2, v2), _, done = mountain_car_step((0.45, 0.07), 2)
        assert p2 >= MC_GOAL_POSITION
        assert done

    def test_energy_pumping_reaches_goal_within_500_steps(self):
        s = (-0.5, 0.0)
        for t in range(1, 501):
            s, _, done = mountain_car_step(s, energy_pumping_policy(s))
            if done:
                break
        assert done and t <= 500

    def test_out_of_bounds_rejected(self):
        with pytest.raises(ValueError):
            mountain_car_step((-1.3, 0.0), 1)
        with pytest.raises(ValueError):
            mountain_car_step((0.0, 0.1), 1)
        with pytest.raises(ValueError):
            mountain_car_step((0.0, 0.0), 3)

    def test_deterministic_trajectories(self):
        s1 = s2 = (-0.45, 0.0)
        for _ in range(100):
            s1, _, d1 = mountain_car_step(s1, energy_pumping_policy(s1))
            s2, _, d2 = mountain_car_step(s2, energy_pumping_policy(s2))
            assert s1 == s2 and d1 == d2
            if d1:
                break


class TestFourier:
    def test_zero_coefficient_term_is_constant_one(self, rng):
        for _ in range(10):
            x = rng.random(2)
            feats = fourier_features(x, order=3)
            assert feats[0] == pytest.approx(1.0)

    def test_all_features_within_unit_interval_bounds(self, rng):
        for _ in range(50):
            feats = fourier_features(rng.random(2), order=4)
            assert np.all(feats <= 1.0) and np.all(feats >= -1.0)

    def test_origin_gives_all_ones(self):
        np.testing.assert_allclose(fourier_features(np.zeros(2), order=3), 1.0)

    def test_dimension(self):
        assert fourier_features(np.zeros(2), order=3).shape == (16,)
        fm = mountain_car_features(order=2)
        assert fm.d == 9
        phi = fm.phi((-0.5, 0.0))
        assert phi.shape == (9,)
        assert np.all(np.abs(phi) <= 1.0)
