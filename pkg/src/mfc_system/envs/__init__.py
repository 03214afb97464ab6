"""Environments and the model-primitive operations on them"""

from typing import Callable, Dict, Tuple

from mfc_system.envs.base import (
    Environment,
    GlobalLaw,
    GlobalState,
    encode_global,
    global_transition_dist,
    global_transition_sample,
    local_transition_sample,
    reward,
)
from mfc_system.envs.firm import FirmInvestmentEnv, firm_env_make
from mfc_system.envs.tabular import (
    TabularEnv,
    bandit_env,
    constant_reward_env,
    identity_env,
    random_tabular_env,
)
from mfc_system.exceptions import ConfigError


def _firm(cfg) -> Tuple[FirmInvestmentEnv, GlobalState]:
    env = firm_env_make(cfg.params)
    alpha0 = cfg.params.lambda0 if cfg.alpha0 is None else cfg.alpha0
    if abs(alpha0) > cfg.params.lambda0:
        raise ConfigError(f"alpha0={alpha0} exceeds lambda0={cfg.params.lambda0}", "env.alpha0")
    return env, GlobalState.scalar(alpha0)


# Config kind -> builder returning (environment, initial global state)
ENV_FACTORIES: Dict[str, Callable] = {
    "firm": _firm,
    "random": lambda cfg: (
        random_tabular_env(cfg.states, cfg.actions, cfg.globals_, cfg.seed, cfg.mean_field),
        GlobalState.finite(cfg.g0),
    ),
    "constant": lambda cfg: (
        constant_reward_env(cfg.reward, cfg.states, cfg.actions),
        GlobalState.finite(0),
    ),
}


def make_env(cfg) -> Tuple[Environment, GlobalState]:
    """Build the environment described by an env config block"""
    try:
        factory = ENV_FACTORIES[cfg.kind]
    except KeyError:
        raise ConfigError(f"unknown environment kind {cfg.kind!r}", "env.kind") from None
    return factory(cfg)


__all__ = [
    "ENV_FACTORIES",
    "Environment",
    "FirmInvestmentEnv",
    "GlobalLaw",
    "GlobalState",
    "TabularEnv",
    "bandit_env",
    "constant_reward_env",
    "encode_global",
    "firm_env_make",
    "global_transition_dist",
    "global_transition_sample",
    "identity_env",
    "local_transition_sample",
    "make_env",
    "random_tabular_env",
    "reward",
]
