"""
Infinite-population (mean-field) dynamics and value computation.

The state distribution mu evolves deterministically given the global path; only the
global state g is random. Values are either Monte-Carlo averages over sampled global
chains or exact sums over every global path (depth-first, with probability pruning).
"""

from dataclasses import dataclass
import math
from typing import List, Optional, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from mfc_system.config import settings
from mfc_system.core.policy import PolicyParams, action_table
from mfc_system.envs.base import Environment, GlobalLaw, GlobalState
from mfc_system.exceptions import ArgumentError, CapabilityError, CapacityError
from mfc_system.models.results import ValueEstimate
from mfc_system.utils.helpers import (
    as_simplex,
    check_gamma,
    check_index,
    default_horizon,
    discounted_sum,
    mean_and_stderr,
    tail_bound,
)
from mfc_system.utils.logger import get_logger
from mfc_system.utils.seeding import derive_rng, fork_seed

logger = get_logger(__name__)

PolicySchedule = Union[PolicyParams, Sequence[PolicyParams]]


def _policy_at(policies: PolicySchedule, t: int) -> PolicyParams:
    if isinstance(policies, PolicyParams):
        return policies
    # a finite schedule repeats its last element
    return policies[min(t, len(policies) - 1)]


@dataclass(frozen=True, eq=False)
class MeanFieldStep:
    """Everything one mean-field transition needs, computed once"""
    pi: NDArray[np.float64]
    nu: NDArray[np.float64]
    kernel: NDArray[np.float64]
    rewards: NDArray[np.float64]
    mu_next: NDArray[np.float64]
    law: GlobalLaw
    reward: float


def mean_field_step(env: Environment, mu: NDArray, g: GlobalState,
                    policy: PolicyParams) -> MeanFieldStep:
    pi = action_table(policy, mu, env.encode(g))
    nu = mu @ pi
    kernel = env.local_kernel(mu, g, nu)
    rewards = env.reward_table(mu, g, nu)
    joint = mu[:, None] * pi
    return MeanFieldStep(
        pi=pi,
        nu=nu,
        kernel=kernel,
        rewards=rewards,
        mu_next=np.einsum("xu,xuy->y", joint, kernel),
        law=env.global_law(mu, g, nu),
        reward=float(np.sum(joint * rewards)),
    )


def _checked(env: Environment, mu, g: GlobalState) -> NDArray[np.float64]:
    mu = as_simplex(mu, "mu", env.local_state_count)
    env.validate_global(g)
    return mu


# -- one-step maps ------------------------------------------------------------------

def nu_mf(env: Environment, mu, g: GlobalState, policy: PolicyParams) -> NDArray[np.float64]:
    """Action distribution nu(u) = sum_x pi(x, mu, g)(u) mu(x)"""
    mu = _checked(env, mu, g)
    return mu @ action_table(policy, mu, env.encode(g))


def p_mf(env: Environment, mu, g: GlobalState, policy: PolicyParams) -> NDArray[np.float64]:
    """Next local-state distribution under the mean-field dynamics"""
    return mean_field_step(env, _checked(env, mu, g), g, policy).mu_next


def pg_mf(env: Environment, mu, g: GlobalState, policy: PolicyParams) -> GlobalLaw:
    """Law of the next global state, P_G(mu, g, nu_mf(mu, g, pi))"""
    return mean_field_step(env, _checked(env, mu, g), g, policy).law


def r_mf(env: Environment, mu, g: GlobalState, policy: PolicyParams) -> float:
    """Population-average reward"""
    return mean_field_step(env, _checked(env, mu, g), g, policy).reward


# -- trajectories ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MFCStep:
    t: int
    mu: NDArray[np.float64]
    g: GlobalState
    reward: float


def rollout_mfc(env: Environment, policy: PolicySchedule, mu0, g0: GlobalState,
                horizon: int, rng: Optional[np.random.Generator] = None) -> List[MFCStep]:
    """One mean-field trajectory; only the global chain consumes randomness"""
    if horizon < 1:
        raise ArgumentError(f"horizon={horizon} must be >= 1")
    mu = _checked(env, mu0, g0)
    g = g0
    steps = []
    for t in range(horizon):
        step = mean_field_step(env, mu, g, _policy_at(policy, t))
        steps.append(MFCStep(t, mu, g, step.reward))
        if t + 1 == horizon:
            break
        if len(step.law.support) == 1:
            g = step.law.support[0]
        else:
            if rng is None:
                raise ArgumentError("a random stream is required for stochastic global chains")
            g = step.law.support[int(rng.choice(len(step.law.support), p=step.law.weights))]
        mu = step.mu_next
    return steps


def estimate_value_mfc_mc(env: Environment, policy: PolicySchedule, mu0, g0: GlobalState,
                          gamma: float, horizon: Optional[int] = None, rollouts: int = 1000,
                          rng: Optional[np.random.Generator] = None) -> ValueEstimate:
    """Monte-Carlo mean-field value over sampled global chains"""
    check_gamma(gamma)
    horizon = default_horizon(gamma) if horizon is None else horizon
    if rollouts < 1:
        raise ArgumentError(f"rollouts={rollouts} must be >= 1")
    tail = tail_bound(env.reward_bound, gamma, horizon)

    if env.global_deterministic:
        steps = rollout_mfc(env, policy, mu0, g0, horizon)
        value = discounted_sum([s.reward for s in steps], gamma)
        return ValueEstimate(value, 0.0, 1, horizon, tail)

    rng = rng if rng is not None else np.random.default_rng()
    master = fork_seed(rng)
    returns = []
    for i in range(rollouts):
        steps = rollout_mfc(env, policy, mu0, g0, horizon, derive_rng(master, "mfc-rollout", i))
        returns.append(discounted_sum([s.reward for s in steps], gamma))
    mean, stderr = mean_and_stderr(returns)
    return ValueEstimate(mean, stderr, rollouts, horizon, tail)


# -- exact enumeration over global paths ---------------------------------------------

@dataclass(frozen=True)
class PathEnumeration:
    value: float
    paths: int
    dropped_mass: float
    horizon: int


def _enumerate(env: Environment, policy: PolicySchedule, mu0: NDArray, g0: GlobalState,
               gamma: float, horizon: int, agent_joint: Optional[NDArray],
               cap: Optional[int], prune: Optional[float]) -> PathEnumeration:
    """
    Depth-first sum of gamma^t * P(path) * reward_t over global paths.

    Each node carries (path probability, mu along the path). With `agent_joint`
    given, the node also carries the representative agent's joint law over (x, u)
    conditional on the path, and the reward is that agent's expected reward.
    """
    cap = settings.ENUMERATION_CAP if cap is None else cap
    prune = settings.PRUNE_PROBABILITY if prune is None else prune
    branching = env.global_support_size
    if branching > 1 and horizon * math.log(branching) > math.log(cap):
        raise CapacityError(
            f"{branching}^{horizon} global paths exceed the enumeration cap of {cap}", cap
        )

    terms: List[float] = []
    dropped: List[float] = []
    leaves = 0
    stack = [(0, 1.0, mu0, g0, agent_joint)]
    while stack:
        t, prob, mu, g, joint = stack.pop()
        step = mean_field_step(env, mu, g, _policy_at(policy, t))
        if joint is None:
            reward = step.reward
        else:
            reward = float(np.sum(joint * step.rewards))
        terms.append(gamma ** t * prob * reward)
        if t + 1 == horizon:
            leaves += 1
            continue
        next_joint = None
        for g_next, weight in zip(step.law.support, step.law.weights):
            p_next = prob * float(weight)
            if p_next < prune:
                dropped.append(p_next)
                continue
            if joint is not None:
                agent_next = np.einsum("xu,xuy->y", joint, step.kernel)
                pi_next = action_table(_policy_at(policy, t + 1), step.mu_next, env.encode(g_next))
                next_joint = agent_next[:, None] * pi_next
            stack.append((t + 1, p_next, step.mu_next, g_next, next_joint))

    dropped_mass = math.fsum(dropped)
    if dropped_mass > 0:
        logger.debug(f"Path enumeration pruned probability mass {dropped_mass:.3e}")
    return PathEnumeration(math.fsum(terms), leaves, dropped_mass, horizon)


def enumerate_value_mfc(env: Environment, policy: PolicySchedule, mu0, g0: GlobalState,
                        gamma: float, horizon: int, cap: Optional[int] = None,
                        prune: Optional[float] = None) -> PathEnumeration:
    check_gamma(gamma)
    if horizon < 1:
        raise ArgumentError(f"horizon={horizon} must be >= 1")
    return _enumerate(env, policy, _checked(env, mu0, g0), g0, gamma, horizon, None, cap, prune)


def exact_value_mfc(env: Environment, policy: PolicySchedule, mu0, g0: GlobalState,
                    gamma: float, horizon: int, cap: Optional[int] = None) -> float:
    """Discounted mean-field value by exact enumeration of global paths"""
    return enumerate_value_mfc(env, policy, mu0, g0, gamma, horizon, cap).value


def compose_p_mf(env: Environment, policy: PolicySchedule, mu, g_path: Sequence[GlobalState]
                 ) -> NDArray[np.float64]:
    """Apply the mean-field update along g_path: P(., g_r) o ... o P(mu, g_0)"""
    mu = _checked(env, mu, g_path[0])
    for t, g in enumerate(g_path):
        mu = mean_field_step(env, mu, g, _policy_at(policy, t)).mu_next
    return mu


def path_probability(env: Environment, policy: PolicySchedule, mu,
                     g_path: Sequence[GlobalState]) -> float:
    """Probability of observing g_path[1:] after starting from (mu, g_path[0])"""
    mu = _checked(env, mu, g_path[0])
    prob = 1.0
    for t in range(len(g_path) - 1):
        step = mean_field_step(env, mu, g_path[t], _policy_at(policy, t))
        prob *= step.law.probability(g_path[t + 1])
        mu = step.mu_next
    return prob


def exact_q_value(env: Environment, policy: PolicyParams, x: int, mu0, g0: GlobalState,
                  u: int, gamma: float, horizon: int, cap: Optional[int] = None) -> float:
    """Q of the representative agent that starts at x and first plays u"""
    check_gamma(gamma)
    mu0 = _checked(env, mu0, g0)
    x = check_index(x, env.local_state_count, "x")
    u = check_index(u, env.action_count, "u")
    joint = np.zeros((env.local_state_count, env.action_count))
    joint[x, u] = 1.0
    return _enumerate(env, policy, mu0, g0, gamma, horizon, joint, cap, 0.0).value


def exact_advantage(env: Environment, policy: PolicyParams, x: int, mu0, g0: GlobalState,
                    u: int, gamma: float, horizon: int, cap: Optional[int] = None) -> float:
    """A = Q(x, mu, g, u) - sum_u' pi(x, mu, g)(u') Q(x, mu, g, u')"""
    mu0 = _checked(env, mu0, g0)
    if env.global_kind != "finite" and not env.global_deterministic:
        raise CapabilityError("exact advantages need an enumerable global chain")
    pi = action_table(policy, mu0, env.encode(g0))[x]
    q = [exact_q_value(env, policy, x, mu0, g0, a, gamma, horizon, cap)
         for a in range(env.action_count)]
    return q[u] - math.fsum(p * v for p, v in zip(pi, q))
