import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfc_system.envs import (
    GlobalState,
    encode_global,
    firm_env_make,
    global_transition_dist,
    global_transition_sample,
    identity_env,
    local_transition_sample,
    make_env,
    random_tabular_env,
    reward,
)
from mfc_system.exceptions import ArgumentError, ConfigError, DistributionError
from mfc_system.models.schemas import FirmEnvConfig, FirmEnvParams, RandomEnvConfig

from conftest import FIG_PARAMS, uniform


def point_mass(size, index):
    mu = np.zeros(size)
    mu[index] = 1.0
    return mu


def with_mean(env, target):
    """Two-point distribution over qualities with the requested mean"""
    lo = int(np.floor(target))
    hi = min(lo + 1, env.Q - 1)
    mu = np.zeros(env.Q)
    if lo == hi:
        mu[lo] = 1.0
    else:
        mu[hi] = target - lo
        mu[lo] = 1.0 - mu[hi]
    return mu


class TestFirmEnvironment:
    def test_sizes_and_reward_bound(self, firm_env):
        assert firm_env.local_state_count == 10
        assert firm_env.action_count == 2
        assert firm_env.reward_bound == pytest.approx(14.0)

    def test_minimum_size(self):
        env = firm_env_make(FirmEnvParams(Q=2))
        assert env.local_state_count == 2

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            FirmEnvParams(Q=1)

    def test_no_investment_keeps_quality(self, firm_env):
        rng = np.random.default_rng(0)
        mu = uniform(10)
        for _ in range(20):
            assert local_transition_sample(firm_env, 4, 0, mu, GlobalState.scalar(1.0),
                                           [0.5, 0.5], rng) == 4

    def test_top_quality_is_fixed_point(self, firm_env):
        rng = np.random.default_rng(1)
        for mean in (0.0, 4.5, 9.0):
            mu = with_mean(firm_env, mean)
            assert local_transition_sample(firm_env, 9, 1, mu, GlobalState.scalar(0.8),
                                           [0.0, 1.0], rng) == 9

    def test_price_update(self, firm_env):
        rng = np.random.default_rng(2)
        g = global_transition_sample(firm_env, point_mass(10, 5), GlobalState.scalar(1.0),
                                     [0.5, 0.5], rng)
        assert g.value == pytest.approx(0.75)
        g = global_transition_sample(firm_env, point_mass(10, 0), GlobalState.scalar(1.0),
                                     [0.5, 0.5], rng)
        assert g.value == pytest.approx(1.0)

    def test_global_dist_is_point_mass(self, firm_env):
        law = global_transition_dist(firm_env, point_mass(10, 5), GlobalState.scalar(1.0), [1.0, 0.0])
        assert len(law.support) == 1
        assert law.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_reward_examples(self, firm_env):
        nu = [0.5, 0.5]
        assert reward(firm_env, 4, 1, point_mass(10, 5), GlobalState.scalar(0.75), nu) == pytest.approx(0.0)
        assert reward(firm_env, 0, 0, point_mass(10, 0), GlobalState.scalar(1.0), nu) == pytest.approx(0.0)
        assert reward(firm_env, 9, 0, point_mass(10, 9), GlobalState.scalar(0.55), nu) == pytest.approx(0.45)

    def test_encoding(self, firm_env):
        assert encode_global(firm_env, GlobalState.scalar(0.75)).tolist() == [0.75]

    def test_step_quality_monotone_and_bounded(self, firm_env):
        xs = np.arange(10)
        for mean in np.linspace(0.0, 10.0, 11):
            for chi in (0.0, 0.5, 0.999):
                nxt = firm_env.step_quality(xs, np.ones(10, dtype=int), mean, np.full(10, chi))
                assert np.all(nxt <= 9)
                assert np.all(nxt >= xs)
                increments = firm_env.headroom(xs, mean)
                assert np.all(np.diff(increments) <= 0)

    def test_exact_kernel_matches_sampled_frequencies(self, firm_env):
        mu = with_mean(firm_env, 3.0)
        kernel = firm_env.local_kernel(mu, GlobalState.scalar(1.0), np.array([0.5, 0.5]))
        assert np.allclose(kernel.sum(axis=-1), 1.0)
        rng = np.random.default_rng(3)
        draws = firm_env.sample_locals(np.full(200_000, 2), np.ones(200_000, dtype=int),
                                       mu, GlobalState.scalar(1.0), np.array([0.5, 0.5]), rng)
        freq = np.bincount(draws, minlength=10) / draws.size
        assert np.allclose(freq, kernel[2, 1], atol=5e-3)

    def test_reward_bounded_under_fuzzing(self, firm_env):
        rng = np.random.default_rng(4)
        for _ in range(2000):
            mu = rng.dirichlet(np.ones(10))
            nu = rng.dirichlet(np.ones(2))
            alpha = firm_env.price(firm_env.mean_quality(mu))
            table = firm_env.reward_table(mu, GlobalState.scalar(alpha), nu)
            assert np.abs(table).max() <= firm_env.reward_bound + 1e-12

    def test_price_sensitivity_capped(self):
        with pytest.raises(ValueError):
            FirmEnvParams(lambda1=2.01)

    @pytest.mark.parametrize("Q", [2, 10, 50])
    def test_strongest_price_sensitivity_keeps_price_in_range(self, Q):
        env = firm_env_make(FirmEnvParams(Q=Q, lambda0=1.5, lambda1=2.0))
        for mu in (point_mass(Q, Q - 1), point_mass(Q, 0), uniform(Q)):
            nu = np.array([0.5, 0.5])
            g_next = global_transition_sample(env, mu, GlobalState.scalar(1.5), nu,
                                              np.random.default_rng(0))
            assert abs(g_next.value) <= 1.5
            table = env.reward_table(mu, g_next, nu)
            assert np.abs(table).max() <= env.reward_bound + 1e-12
            assert reward(env, Q - 1, 1, mu, g_next, nu) == pytest.approx(table[Q - 1, 1])

    def test_price_outside_range_rejected(self, firm_env):
        with pytest.raises(ArgumentError):
            encode_global(firm_env, GlobalState.scalar(3.0))


class TestTabularEnvironments:
    def test_identity_transition(self):
        env = identity_env(states=3, actions=2)
        rng = np.random.default_rng(0)
        for x in range(3):
            assert local_transition_sample(env, x, 1, uniform(3), GlobalState.finite(0),
                                           [0.5, 0.5], rng) == x

    def test_uniform_global_frequencies(self, uniform_global_env):
        rng = np.random.default_rng(5)
        draws = [global_transition_sample(uniform_global_env, uniform(2), GlobalState.finite(0),
                                          [1.0], rng).index for _ in range(10_000)]
        share = np.mean(draws)
        sigma = np.sqrt(0.25 / 10_000)
        assert abs(share - 0.5) < 3 * sigma

    def test_uniform_global_dist(self):
        env = identity_env(states=2, actions=1, globals_=3, uniform_global=True)
        law = global_transition_dist(env, uniform(2), GlobalState.finite(2), [1.0])
        assert np.allclose(law.weights, 1 / 3)

    def test_one_hot_encoding(self):
        env = identity_env(states=2, actions=1, globals_=3)
        assert encode_global(env, GlobalState.finite(1)).tolist() == [0.0, 1.0, 0.0]
        assert encode_global(env, GlobalState.finite(0)).size == env.encoding_dim

    def test_bad_index_and_simplex(self):
        env = identity_env(states=2, actions=2)
        rng = np.random.default_rng(0)
        with pytest.raises(ArgumentError):
            local_transition_sample(env, 2, 0, uniform(2), GlobalState.finite(0), [0.5, 0.5], rng)
        with pytest.raises(DistributionError):
            local_transition_sample(env, 0, 0, [0.7, 0.7], GlobalState.finite(0), [0.5, 0.5], rng)
        with pytest.raises(ArgumentError):
            encode_global(env, GlobalState.finite(1))

    def test_declared_lipschitz_constants(self):
        env = random_tabular_env(2, 2, 2, seed=1)
        c = env.lipschitz_constants()
        assert c.M == env.reward_bound
        assert c.L_P <= 1.0 and c.L_G <= 1.0


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 10_000), x=st.integers(0, 2), u=st.integers(0, 1), g=st.integers(0, 1))
def test_sampled_states_stay_in_range(seed, x, u, g):
    env = random_tabular_env(3, 2, 2, seed=seed)
    rng = np.random.default_rng(seed)
    mu = rng.dirichlet(np.ones(3))
    nu = rng.dirichlet(np.ones(2))
    x_next = local_transition_sample(env, x, u, mu, GlobalState.finite(g), nu, rng)
    g_next = global_transition_sample(env, mu, GlobalState.finite(g), nu, rng)
    assert 0 <= x_next < 3
    assert 0 <= g_next.index < 2
    assert abs(reward(env, x, u, mu, GlobalState.finite(g), nu)) <= env.reward_bound


def test_make_env_registry():
    env, g0 = make_env(FirmEnvConfig(params=FIG_PARAMS, alpha0=0.8))
    assert env.name == "firm" and g0.value == pytest.approx(0.8)
    env, g0 = make_env(RandomEnvConfig(states=3, actions=2, globals=4, g0=2))
    assert env.global_count == 4 and g0.index == 2
    with pytest.raises(ConfigError):
        make_env(FirmEnvConfig(params=FIG_PARAMS, alpha0=2.0))
