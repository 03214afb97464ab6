from collections import defaultdict
import math

import numpy as np
import pytest

from mfc_system.core.nagent import (
    action_deviation_estimate,
    centered_abs_sum_estimate,
    empirical_action_dist,
    empirical_state_dist,
    estimate_value_nagent,
    initial_state,
    rollout_nagent,
    sample_initial_locals,
    step_nagent,
)
from mfc_system.core.policy import action_table
from mfc_system.envs import GlobalState, TabularEnv, constant_reward_env, identity_env, random_tabular_env
from mfc_system.exceptions import ArgumentError

from conftest import random_policy, zero_policy

G0 = GlobalState.finite(0)


def two_agent_value(env, phi, start, gamma, horizon):
    """Exhaustive expectation over every joint (state, action) path of two agents"""
    X, U = env.local_state_count, env.action_count
    code = env.encode(G0)
    dist = {tuple(sorted(start)): 1.0}
    terms = []
    for t in range(horizon):
        nxt = defaultdict(float)
        for (a, b), p in dist.items():
            mu = np.bincount([a, b], minlength=X) / 2
            pi = action_table(phi, mu, code)
            for u1 in range(U):
                for u2 in range(U):
                    q = p * pi[a, u1] * pi[b, u2]
                    nu = np.bincount([u1, u2], minlength=U) / 2
                    R = env.reward_table(mu, G0, nu)
                    K = env.local_kernel(mu, G0, nu)
                    terms.append(gamma**t * q * (R[a, u1] + R[b, u2]) / 2)
                    for y1 in range(X):
                        for y2 in range(X):
                            nxt[tuple(sorted((y1, y2)))] += q * K[a, u1, y1] * K[b, u2, y2]
        dist = nxt
    return math.fsum(terms)


class TestEmpiricalDistributions:
    def test_counts_and_weights(self):
        emp = empirical_state_dist([0, 0, 1, 2], 3)
        assert emp.counts.tolist() == [2, 1, 1]
        assert emp.weights.tolist() == [0.5, 0.25, 0.25]
        assert empirical_action_dist(np.array([1, 1, 1]), 2).weights.tolist() == [0.0, 1.0]

    def test_weights_are_multiples_of_one_over_n(self):
        rng = np.random.default_rng(0)
        xs = rng.integers(0, 4, size=37)
        emp = empirical_state_dist(xs, 4)
        assert emp.counts.sum() == 37
        assert np.allclose(emp.weights * 37, np.round(emp.weights * 37))

    @pytest.mark.parametrize("bad", [[], [0.0, 1.0], [0, 3], [-1, 0]])
    def test_invalid_inputs(self, bad):
        with pytest.raises(ArgumentError):
            empirical_state_dist(bad, 3)


class TestStep:
    def test_identity_environment_keeps_locals(self):
        env = identity_env(states=3, actions=2, reward=0.5)
        state = initial_state(env, [2, 0, 1, 1], G0)
        nxt, step_reward = step_nagent(env, random_policy(env, 0), state, np.random.default_rng(1))
        assert nxt.locals.tolist() == state.locals.tolist()
        assert nxt.t == 1 and nxt.global_state == G0
        assert step_reward == pytest.approx(0.5)

    def test_top_quality_firms_stay_put(self, firm_env):
        state = initial_state(firm_env, [9] * 6, GlobalState.scalar(1.0))
        rng = np.random.default_rng(5)
        for seed in range(5):
            state, _ = step_nagent(firm_env, random_policy(firm_env, seed), state, rng)
            assert state.locals.tolist() == [9] * 6

    def test_single_agent_population(self, two_state_env):
        state = initial_state(two_state_env, [1], G0)
        rng = np.random.default_rng(2)
        for _ in range(20):
            state, step_reward = step_nagent(two_state_env, random_policy(two_state_env, 1), state, rng)
            assert state.agent_count == 1
            assert step_reward in (0.0, 0.5, 1.0, -0.5)

    def test_initial_state_validation(self, firm_env):
        with pytest.raises(ArgumentError):
            initial_state(firm_env, [0, 10], GlobalState.scalar(1.0))
        with pytest.raises(ArgumentError):
            initial_state(firm_env, [0, 1], GlobalState.finite(0))

    def test_sample_initial_locals_frequencies(self):
        rng = np.random.default_rng(3)
        xs = sample_initial_locals([0.2, 0.5, 0.3], 50_000, rng)
        freq = np.bincount(xs, minlength=3) / xs.size
        assert np.allclose(freq, [0.2, 0.5, 0.3], atol=0.01)
        with pytest.raises(ArgumentError):
            sample_initial_locals([0.5, 0.5], 0, rng)


class TestValueEstimate:
    def test_constant_reward_geometric_sum(self):
        env = constant_reward_env(2.0)
        est = estimate_value_nagent(env, random_policy(env, 2), [0, 1, 1], G0, 0.9, 20, 5,
                                    np.random.default_rng(4))
        assert est.mean == pytest.approx(2.0 * (1 - 0.9**20) / 0.1, rel=1e-12)
        assert est.stderr < 1e-12
        assert est.horizon == 20 and est.rollouts == 5

    def test_two_agent_exhaustive_oracle(self):
        env = random_tabular_env(2, 2, 1, seed=7)
        phi = random_policy(env, 3)
        exact = two_agent_value(env, phi, [0, 1], 0.8, 8)
        est = estimate_value_nagent(env, phi, [0, 1], G0, 0.8, 8, 4000, np.random.default_rng(5))
        assert abs(est.mean - exact) <= 3 * est.stderr + 1e-12

    def test_same_seed_same_estimate(self, random_env):
        phi = random_policy(random_env, 4)
        first = estimate_value_nagent(random_env, phi, [0, 1, 1, 0], G0, 0.9, 15, 10,
                                      np.random.default_rng(6))
        second = estimate_value_nagent(random_env, phi, [0, 1, 1, 0], G0, 0.9, 15, 10,
                                       np.random.default_rng(6))
        assert first == second

    def test_permutation_invariance(self, random_env):
        phi = random_policy(random_env, 5)
        locals_ = [1, 0, 0, 1, 1, 0, 1]
        permuted = list(reversed(locals_))
        a = estimate_value_nagent(random_env, phi, locals_, G0, 0.9, 15, 10, np.random.default_rng(7))
        b = estimate_value_nagent(random_env, phi, permuted, G0, 0.9, 15, 10, np.random.default_rng(7))
        assert a.mean == b.mean

    def test_zero_reward(self):
        env = identity_env(states=2, actions=2)
        est = estimate_value_nagent(env, random_policy(env, 1), [0, 1], G0, 0.5, 10, 4,
                                    np.random.default_rng(3))
        assert est.mean == 0.0 and est.stderr == 0.0

    def test_longer_horizon_extends_shared_prefix(self, two_state_env):
        """Rollouts share their random streams, so the difference is within the tail bound"""
        phi = random_policy(two_state_env, 6)
        short = estimate_value_nagent(two_state_env, phi, [0, 1, 1], G0, 0.9, 10, 8,
                                      np.random.default_rng(8))
        long = estimate_value_nagent(two_state_env, phi, [0, 1, 1], G0, 0.9, 40, 8,
                                     np.random.default_rng(8))
        assert abs(long.mean - short.mean) <= short.tail_bound + 1e-12

    def test_non_negative_rewards_grow_with_horizon(self, two_state_env):
        env = TabularEnv(two_state_env.kernel, np.ones((1, 1)), np.array([[0.0, 0.5], [1.0, 0.2]]))
        phi = random_policy(env, 7)
        means = [estimate_value_nagent(env, phi, [0, 1, 1], G0, 0.9, H, 8, np.random.default_rng(9)).mean
                 for H in (1, 5, 20, 60)]
        assert means == sorted(means)

    def test_rollout_length(self, firm_env):
        state = initial_state(firm_env, [0] * 5, GlobalState.scalar(1.0))
        rewards = rollout_nagent(firm_env, zero_policy(firm_env), state, 12, np.random.default_rng(9))
        assert len(rewards) == 12
        assert all(abs(r) <= firm_env.reward_bound for r in rewards)


class TestConcentration:
    def test_centered_sum_bound(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            M = int(rng.integers(1, 17))
            N = int(rng.integers(1, 65))
            # each column is a sub-probability vector over m
            probs = rng.dirichlet(np.ones(M + 1), size=N).T[:M]
            mean, stderr = centered_abs_sum_estimate(probs, 10_000, rng)
            assert mean <= math.sqrt(M * N) + 3 * stderr

    def test_degenerate_probabilities_have_no_deviation(self):
        probs = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 0.0]])
        mean, stderr = centered_abs_sum_estimate(probs, 100, np.random.default_rng(11))
        assert mean == 0.0 and stderr == 0.0

    def test_invalid_probabilities(self):
        with pytest.raises(ArgumentError):
            centered_abs_sum_estimate(np.array([[1.5]]), 10, np.random.default_rng(0))

    @pytest.mark.parametrize("agents", [10, 100, 1000])
    def test_action_deviation_shrinks_with_population(self, firm_env, agents):
        rng = np.random.default_rng(agents)
        phi = random_policy(firm_env, 12)
        locals_ = sample_initial_locals(np.full(10, 0.1), agents, rng)
        mean, stderr = action_deviation_estimate(firm_env, phi, locals_, GlobalState.scalar(0.8),
                                                 500, rng)
        assert mean <= math.sqrt(firm_env.action_count / agents) + 3 * stderr
