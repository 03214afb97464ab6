"""
Base class for all environments and the model-primitive operations on them
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
import math
from typing import Literal, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from mfc_system.exceptions import ArgumentError, CapabilityError
from mfc_system.models.schemas import LipschitzConstants
from mfc_system.utils.helpers import as_simplex, check_index, sample_categorical, sample_rows

GlobalKind = Literal["finite", "scalar"]


@dataclass(frozen=True, slots=True)
class GlobalState:
    """Shared global state: a finite index or a real scalar"""
    value: float
    kind: GlobalKind = "finite"

    @classmethod
    def finite(cls, index: int) -> "GlobalState":
        return cls(int(index), "finite")

    @classmethod
    def scalar(cls, value: float) -> "GlobalState":
        return cls(float(value), "scalar")

    @property
    def index(self) -> int:
        if self.kind != "finite":
            raise CapabilityError("scalar global states have no index")
        return int(self.value)


@dataclass(frozen=True, eq=False)
class GlobalLaw:
    """Distribution over the (finite) support of the next global state"""
    support: Tuple[GlobalState, ...]
    weights: NDArray[np.float64]

    def __post_init__(self):
        if len(self.support) != len(self.weights):
            raise ArgumentError("support and weights differ in length")

    def probability(self, g: GlobalState) -> float:
        return math.fsum(w for s, w in zip(self.support, self.weights) if s == g)

    @classmethod
    def point_mass(cls, g: GlobalState) -> "GlobalLaw":
        return cls((g,), np.ones(1))


class Environment(ABC):
    """
    Model instance (X, U, G, P, P_G, r, M).

    Hooks receive the population only through (mu, g, nu); per-agent data never
    enters, so every environment is exchangeable by construction.
    """

    local_state_count: int
    action_count: int
    reward_bound: float
    global_kind: GlobalKind
    global_count: Optional[int] = None
    name: str = "environment"

    def _check_sizes(self):
        if self.local_state_count < 1 or self.action_count < 1:
            raise ArgumentError("local_state_count and action_count must be >= 1")
        if not self.reward_bound > 0:
            raise ArgumentError("reward_bound must be positive")
        if self.global_kind == "finite" and (self.global_count is None or self.global_count < 1):
            raise ArgumentError("finite environments need global_count >= 1")

    # -- hooks ---------------------------------------------------------------

    @abstractmethod
    def local_kernel(self, mu: NDArray, g: GlobalState, nu: NDArray) -> NDArray[np.float64]:
        """Array K[x, u, y] = P(x, u, mu, g, nu)(y)"""

    @abstractmethod
    def reward_table(self, mu: NDArray, g: GlobalState, nu: NDArray) -> NDArray[np.float64]:
        """Array R[x, u] = r(x, u, mu, g, nu)"""

    @abstractmethod
    def global_law(self, mu: NDArray, g: GlobalState, nu: NDArray) -> GlobalLaw:
        """Law of g' given (mu, g, nu)"""

    @abstractmethod
    def encode(self, g: GlobalState) -> NDArray[np.float64]:
        """Fixed-length real encoding of g consumed by the policy"""

    @property
    @abstractmethod
    def encoding_dim(self) -> int:
        ...

    def lipschitz_constants(self) -> Optional[LipschitzConstants]:
        """Known Lipschitz constants of (r, P, P_G), if the environment declares them"""
        return None

    # -- derived behaviour ---------------------------------------------------

    @property
    def global_support_size(self) -> int:
        """Branching factor of the global chain (1 for deterministic scalar chains)"""
        return self.global_count if self.global_kind == "finite" else 1

    @property
    def global_deterministic(self) -> bool:
        return self.global_kind == "scalar" or self.global_count == 1

    def validate_global(self, g: GlobalState) -> GlobalState:
        if g.kind != self.global_kind:
            raise ArgumentError(f"{self.name} expects a {self.global_kind} global state, got {g.kind}")
        if g.kind == "finite":
            check_index(g.value, self.global_count, "g")
        elif not math.isfinite(g.value):
            raise ArgumentError(f"scalar global state must be finite, got {g.value}")
        return g

    def sample_locals(self, xs: NDArray, us: NDArray, mu: NDArray, g: GlobalState,
                      nu: NDArray, rng: np.random.Generator) -> NDArray[np.int64]:
        """Independent next local states for a batch of (x, u) pairs"""
        kernel = self.local_kernel(mu, g, nu)
        return sample_rows(kernel[xs, us], rng)

    def sample_global(self, mu: NDArray, g: GlobalState, nu: NDArray,
                      rng: np.random.Generator) -> GlobalState:
        law = self.global_law(mu, g, nu)
        if len(law.support) == 1:
            return law.support[0]
        return law.support[sample_categorical(law.weights, rng)]

    def initial_global(self) -> GlobalState:
        if self.global_kind == "finite":
            return GlobalState.finite(0)
        raise CapabilityError(f"{self.name} has no default initial global state")


# -- model primitives ---------------------------------------------------------

def _check_inputs(env: Environment, mu, g: GlobalState, nu):
    mu = as_simplex(mu, "mu", env.local_state_count)
    nu = as_simplex(nu, "nu", env.action_count)
    env.validate_global(g)
    return mu, nu


def local_transition_sample(env: Environment, x: int, u: int, mu, g: GlobalState, nu,
                            rng: np.random.Generator) -> int:
    """One draw x' ~ P(x, u, mu, g, nu)"""
    x = check_index(x, env.local_state_count, "x")
    u = check_index(u, env.action_count, "u")
    mu, nu = _check_inputs(env, mu, g, nu)
    return int(env.sample_locals(np.array([x]), np.array([u]), mu, g, nu, rng)[0])


def global_transition_sample(env: Environment, mu, g: GlobalState, nu,
                             rng: np.random.Generator) -> GlobalState:
    """One draw g' ~ P_G(mu, g, nu)"""
    mu, nu = _check_inputs(env, mu, g, nu)
    return env.sample_global(mu, g, nu, rng)


def global_transition_dist(env: Environment, mu, g: GlobalState, nu) -> GlobalLaw:
    mu, nu = _check_inputs(env, mu, g, nu)
    return env.global_law(mu, g, nu)


def reward(env: Environment, x: int, u: int, mu, g: GlobalState, nu) -> float:
    x = check_index(x, env.local_state_count, "x")
    u = check_index(u, env.action_count, "u")
    mu, nu = _check_inputs(env, mu, g, nu)
    return float(env.reward_table(mu, g, nu)[x, u])


def encode_global(env: Environment, g: GlobalState) -> NDArray[np.float64]:
    env.validate_global(g)
    return env.encode(g)


def one_hot(index: int, size: int) -> NDArray[np.float64]:
    vec = np.zeros(size)
    vec[index] = 1.0
    return vec
