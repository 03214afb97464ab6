"""Shared fixtures: small environments and policies"""

from pathlib import Path

import numpy as np
import pytest

from mfc_system.core.policy import policy_for_env
from mfc_system.envs import (
    GlobalState,
    TabularEnv,
    bandit_env,
    firm_env_make,
    identity_env,
    random_tabular_env,
)
from mfc_system.models.schemas import FirmEnvParams

FIG_PARAMS = FirmEnvParams(Q=10, lambda0=1.0, lambda1=0.5, beta_R=0.5, lambda_R=0.5)


@pytest.fixture
def firm_env():
    return firm_env_make(FIG_PARAMS)


@pytest.fixture
def two_state_env():
    """|X|=2, |U|=2, |G|=1 with action-dependent moves and rewards"""
    kernel = np.array([
        [[0.9, 0.1], [0.3, 0.7]],
        [[0.2, 0.8], [0.6, 0.4]],
    ])
    rewards = np.array([[0.0, 0.5], [1.0, -0.5]])
    return TabularEnv(kernel, np.ones((1, 1)), rewards, name="two-state")


@pytest.fixture
def bandit():
    return bandit_env([1.0, 0.0])


@pytest.fixture
def uniform_global_env():
    return identity_env(states=2, actions=1, globals_=2, uniform_global=True)


@pytest.fixture(params=[3, 11, 29])
def random_env(request):
    return random_tabular_env(2, 2, 2, seed=request.param)


def random_policy(env, seed: int, scale: float = 1.0):
    return policy_for_env(env, scheme="normal", scale=scale, seed=seed)


def zero_policy(env):
    return policy_for_env(env)


def uniform(size: int) -> np.ndarray:
    return np.full(size, 1.0 / size)


def g0_of(env) -> GlobalState:
    return env.initial_global()


def write_config(path: Path, text: str) -> Path:
    path.write_text(text)
    return path
