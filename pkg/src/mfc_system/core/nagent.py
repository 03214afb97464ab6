"""
Finite N-agent system with a shared global state.

Agents draw actions independently from pi(x, mu^N, g), move independently through
P(x, u, mu^N, g, nu^N) and share a single global transition P_G(mu^N, g, nu^N).
V_N is estimated by Monte-Carlo rollouts truncated at a reported horizon.
"""

from dataclasses import dataclass
import math
from typing import Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from mfc_system.core.meanfield import nu_mf
from mfc_system.core.policy import PolicyParams, action_table
from mfc_system.envs.base import Environment, GlobalState
from mfc_system.exceptions import ArgumentError
from mfc_system.models.results import ValueEstimate
from mfc_system.utils.helpers import (
    as_simplex,
    check_gamma,
    default_horizon,
    discounted_sum,
    mean_and_stderr,
    sample_rows,
    tail_bound,
)
from mfc_system.utils.logger import get_logger
from mfc_system.utils.seeding import derive_rng, fork_seed

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Fractions counts / N; `weights` is a simplex vector with entries in (1/N) * Z"""
    counts: NDArray[np.int64]
    denominator: int

    @property
    def weights(self) -> NDArray[np.float64]:
        return self.counts / self.denominator


def _empirical(indices, size: int, label: str) -> EmpiricalDistribution:
    arr = np.asarray(indices)
    if arr.ndim != 1 or arr.size == 0:
        raise ArgumentError(f"{label} must be a non-empty 1-D vector")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ArgumentError(f"{label} must hold integer indices")
    if arr.min() < 0 or arr.max() >= size:
        raise ArgumentError(f"{label} has entries outside [0, {size})")
    return EmpiricalDistribution(np.bincount(arr, minlength=size), arr.size)


def empirical_state_dist(locals_, state_count: int) -> EmpiricalDistribution:
    return _empirical(locals_, state_count, "locals")


def empirical_action_dist(actions, action_count: int) -> EmpiricalDistribution:
    return _empirical(actions, action_count, "actions")


@dataclass(frozen=True, eq=False)
class NAgentState:
    locals: NDArray[np.int64]
    global_state: GlobalState
    t: int = 0

    @property
    def agent_count(self) -> int:
        return self.locals.size


def initial_state(env: Environment, locals_, g0: GlobalState) -> NAgentState:
    """
    Validated starting state. Agents are exchangeable, so the population is stored
    sorted; permuting the input therefore leaves every downstream draw unchanged.
    """
    empirical_state_dist(locals_, env.local_state_count)
    locals_ = np.sort(np.asarray(locals_, dtype=np.int64))
    env.validate_global(g0)
    return NAgentState(locals_, g0, 0)


def sample_initial_locals(mu0, agent_count: int, rng: np.random.Generator) -> NDArray[np.int64]:
    """Draw agent_count local states i.i.d. from mu0"""
    if agent_count < 1:
        raise ArgumentError(f"agent_count={agent_count} must be >= 1")
    mu0 = as_simplex(mu0, "mu0")
    return sample_rows(np.broadcast_to(mu0, (agent_count, mu0.size)), rng)


def step_nagent(env: Environment, policy: PolicyParams, state: NAgentState,
                rng: np.random.Generator) -> Tuple[NAgentState, float]:
    xs = state.locals
    g = state.global_state
    mu = empirical_state_dist(xs, env.local_state_count).weights
    pi = action_table(policy, mu, env.encode(g))
    us = sample_rows(pi[xs], rng)
    nu = empirical_action_dist(us, env.action_count).weights

    step_reward = float(np.mean(env.reward_table(mu, g, nu)[xs, us]))
    next_locals = np.asarray(env.sample_locals(xs, us, mu, g, nu, rng), dtype=np.int64)
    next_global = env.sample_global(mu, g, nu, rng)
    return NAgentState(next_locals, next_global, state.t + 1), step_reward


def rollout_nagent(env: Environment, policy: PolicyParams, state: NAgentState,
                   horizon: int, rng: np.random.Generator) -> list[float]:
    rewards = []
    for _ in range(horizon):
        state, step_reward = step_nagent(env, policy, state, rng)
        rewards.append(step_reward)
    return rewards


def estimate_value_nagent(env: Environment, policy: PolicyParams, initial_locals,
                          initial_global: GlobalState, gamma: float,
                          horizon: Optional[int] = None, rollouts: int = 20,
                          rng: Optional[np.random.Generator] = None) -> ValueEstimate:
    """Monte-Carlo estimate of V_N from a fixed (x_0, g_0)"""
    check_gamma(gamma)
    horizon = default_horizon(gamma) if horizon is None else horizon
    if horizon < 1 or rollouts < 1:
        raise ArgumentError(f"horizon={horizon} and rollouts={rollouts} must both be >= 1")
    start = initial_state(env, initial_locals, initial_global)

    rng = rng if rng is not None else np.random.default_rng()
    master = fork_seed(rng)
    returns = []
    for i in range(rollouts):
        rewards = rollout_nagent(env, policy, start, horizon, derive_rng(master, "nagent-rollout", i))
        returns.append(discounted_sum(rewards, gamma))
    mean, stderr = mean_and_stderr(returns)
    logger.debug(f"V_N estimate over {rollouts} rollouts (N={start.agent_count}): {mean:.6f} +/- {stderr:.2e}")
    return ValueEstimate(mean, stderr, rollouts, horizon, tail_bound(env.reward_bound, gamma, horizon))


# -- concentration diagnostics --------------------------------------------------------

def centered_abs_sum_estimate(probabilities: NDArray, trials: int,
                              rng: np.random.Generator, chunk: int = 1000) -> Tuple[float, float]:
    """
    Estimate sum_m E|sum_n (X_mn - E X_mn)| for independent X_mn ~ Bernoulli(p_mn).

    Returns (mean, standard error) over `trials` independent draws of the family.
    """
    probs = np.asarray(probabilities, dtype=np.float64)
    if probs.ndim != 2 or probs.size == 0:
        raise ArgumentError("probabilities must be a non-empty (M, N) matrix")
    if np.any(probs < 0) or np.any(probs > 1):
        raise ArgumentError("probabilities must lie in [0, 1]")
    if trials < 1:
        raise ArgumentError("trials must be >= 1")

    totals = []
    remaining = trials
    while remaining:
        batch = min(chunk, remaining)
        draws = rng.random((batch, *probs.shape)) < probs
        deviations = np.abs((draws - probs).sum(axis=2)).sum(axis=1)
        totals.extend(deviations.tolist())
        remaining -= batch
    return mean_and_stderr(totals)


def action_deviation_estimate(env: Environment, policy: PolicyParams, locals_,
                              g: GlobalState, samples: int,
                              rng: np.random.Generator) -> Tuple[float, float]:
    """Estimate E|nu^N - nu_mf(mu^N, g, pi)|_1 for a fixed population"""
    if samples < 1:
        raise ArgumentError("samples must be >= 1")
    state = initial_state(env, locals_, g)
    mu = empirical_state_dist(state.locals, env.local_state_count).weights
    target = nu_mf(env, mu, g, policy)
    rows = action_table(policy, mu, env.encode(g))[state.locals]
    gaps = []
    for _ in range(samples):
        us = sample_rows(rows, rng)
        nu = empirical_action_dist(us, env.action_count).weights
        gaps.append(math.fsum(np.abs(nu - target)))
    return mean_and_stderr(gaps)
