"""
Finite tabular environments.

Kernels and rewards are stored as arrays. Mean-field dependence enters by blending
two tables: local kernels and rewards interpolate on mu(0), the global kernel on
nu(0). With no alternative tables the environment ignores the population.
"""

from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from mfc_system.envs.base import Environment, GlobalLaw, GlobalState, one_hot
from mfc_system.exceptions import ArgumentError
from mfc_system.models.schemas import LipschitzConstants
from mfc_system.utils.seeding import derive_rng


def _check_stochastic(table: NDArray, name: str, axis: int = -1):
    if np.any(table < 0) or not np.allclose(table.sum(axis=axis), 1.0, atol=1e-12):
        raise ArgumentError(f"{name} rows must be probability vectors")


class TabularEnv(Environment):
    """Finite X, U, G environment defined by explicit tables"""

    global_kind = "finite"

    def __init__(
        self,
        kernel: NDArray,
        global_kernel: NDArray,
        rewards: NDArray,
        kernel_alt: Optional[NDArray] = None,
        global_kernel_alt: Optional[NDArray] = None,
        rewards_alt: Optional[NDArray] = None,
        reward_bound: Optional[float] = None,
        name: str = "tabular",
    ):
        self.kernel = np.asarray(kernel, dtype=np.float64)
        self.global_kernel = np.asarray(global_kernel, dtype=np.float64)
        self.rewards = np.asarray(rewards, dtype=np.float64)
        self.kernel_alt = self.kernel if kernel_alt is None else np.asarray(kernel_alt, dtype=np.float64)
        self.global_kernel_alt = (self.global_kernel if global_kernel_alt is None
                                  else np.asarray(global_kernel_alt, dtype=np.float64))
        self.rewards_alt = self.rewards if rewards_alt is None else np.asarray(rewards_alt, dtype=np.float64)
        self.name = name

        X, U, Y = self.kernel.shape
        if X != Y:
            raise ArgumentError(f"kernel shape {self.kernel.shape} is not (X, U, X)")
        G = self.global_kernel.shape[0]
        if self.global_kernel.shape != (G, G):
            raise ArgumentError(f"global kernel shape {self.global_kernel.shape} is not (G, G)")
        for table, expected, label in (
            (self.kernel_alt, (X, U, X), "kernel_alt"),
            (self.global_kernel_alt, (G, G), "global_kernel_alt"),
            (self.rewards, (X, U), "rewards"),
            (self.rewards_alt, (X, U), "rewards_alt"),
        ):
            if table.shape != expected:
                raise ArgumentError(f"{label} has shape {table.shape}, expected {expected}")
        for table, label in ((self.kernel, "kernel"), (self.kernel_alt, "kernel_alt"),
                             (self.global_kernel, "global_kernel"),
                             (self.global_kernel_alt, "global_kernel_alt")):
            _check_stochastic(table, label)

        self.local_state_count = X
        self.action_count = U
        self.global_count = G
        largest = float(max(np.abs(self.rewards).max(), np.abs(self.rewards_alt).max()))
        self.reward_bound = reward_bound if reward_bound is not None else max(largest, 1.0)
        if largest > self.reward_bound:
            raise ArgumentError(f"rewards reach {largest}, above reward_bound {self.reward_bound}")
        self._support = tuple(GlobalState.finite(i) for i in range(G))
        self._check_sizes()

    @property
    def encoding_dim(self) -> int:
        return self.global_count

    def local_kernel(self, mu, g, nu):
        w = mu[0]
        return (1.0 - w) * self.kernel + w * self.kernel_alt

    def reward_table(self, mu, g, nu):
        w = mu[0]
        return (1.0 - w) * self.rewards + w * self.rewards_alt

    def global_law(self, mu, g, nu) -> GlobalLaw:
        w = nu[0]
        row = (1.0 - w) * self.global_kernel[g.index] + w * self.global_kernel_alt[g.index]
        return GlobalLaw(self._support, row)

    def encode(self, g: GlobalState) -> NDArray[np.float64]:
        return one_hot(g.index, self.global_count)

    def lipschitz_constants(self) -> LipschitzConstants:
        # blending on a single coordinate: |mu(0) - mu'(0)| <= |mu - mu'|_1 / 2
        return LipschitzConstants(
            M=self.reward_bound,
            L_R=float(np.abs(self.rewards_alt - self.rewards).max()) / 2,
            L_P=float(np.abs(self.kernel_alt - self.kernel).sum(axis=-1).max()) / 2,
            L_G=float(np.abs(self.global_kernel_alt - self.global_kernel).sum(axis=-1).max()) / 2,
            L_Q=0.0,
        )


# -- factories ----------------------------------------------------------------

def identity_env(states: int = 2, actions: int = 1, globals_: int = 1,
                 reward: float = 0.0, uniform_global: bool = False) -> TabularEnv:
    """Every agent keeps its state; the reward is the constant given"""
    kernel = np.broadcast_to(np.eye(states)[:, None, :], (states, actions, states)).copy()
    if uniform_global:
        global_kernel = np.full((globals_, globals_), 1.0 / globals_)
    else:
        global_kernel = np.eye(globals_)
    rewards = np.full((states, actions), float(reward))
    return TabularEnv(kernel, global_kernel, rewards,
                      reward_bound=max(abs(reward), 1.0), name="identity")


def constant_reward_env(reward: float, states: int = 2, actions: int = 2,
                        globals_: int = 1) -> TabularEnv:
    return identity_env(states, actions, globals_, reward=reward)


def bandit_env(arm_rewards: Sequence[float]) -> TabularEnv:
    """Single-state, single-global environment whose reward depends only on the action"""
    arms = len(arm_rewards)
    kernel = np.ones((1, arms, 1))
    rewards = np.asarray(arm_rewards, dtype=np.float64)[None, :]
    return TabularEnv(kernel, np.ones((1, 1)), rewards,
                      reward_bound=max(float(np.abs(rewards).max()), 1.0), name="bandit")


def random_tabular_env(states: int, actions: int, globals_: int, seed: int,
                       mean_field: bool = True, reward_scale: float = 1.0) -> TabularEnv:
    """Seeded random environment, optionally coupled to (mu, nu) through blended tables"""
    rng = derive_rng(seed, "random-env")

    def stochastic(shape):
        return rng.dirichlet(np.ones(shape[-1]), size=shape[:-1])

    kernel = stochastic((states, actions, states))
    global_kernel = stochastic((globals_, globals_))
    rewards = rng.uniform(-reward_scale, reward_scale, size=(states, actions))
    alt = {}
    if mean_field:
        alt = dict(
            kernel_alt=stochastic((states, actions, states)),
            global_kernel_alt=stochastic((globals_, globals_)),
            rewards_alt=rng.uniform(-reward_scale, reward_scale, size=(states, actions)),
        )
    return TabularEnv(kernel, global_kernel, rewards, reward_bound=reward_scale,
                      name="random", **alt)
