"""
Firm investment benchmark: N firms choose whether to invest in product quality.

Local state x in {0..Q-1} is a firm's quality, action u in {0, 1} is invest or not,
and the shared global state is the price per unit quality alpha. Quality improves
by floor(chi * (Q-1-x) * (1 - mean_quality/Q)) with chi ~ Uniform[0, 1) when the
firm invests; alpha' = lambda0 * (1 - lambda1 * mean_quality / Q) and the reward
is alpha * x - beta_R * mean_quality - lambda_R * u.
"""

import math

import numpy as np
from numpy.typing import NDArray

from mfc_system.envs.base import Environment, GlobalLaw, GlobalState
from mfc_system.exceptions import ArgumentError
from mfc_system.models.schemas import FirmEnvParams


class FirmInvestmentEnv(Environment):
    """Firm investment environment with a deterministic scalar price"""

    name = "firm"
    global_kind = "scalar"
    global_count = None

    def __init__(self, params: FirmEnvParams):
        self.params = params
        self.Q = params.Q
        self.local_state_count = params.Q
        self.action_count = 2
        self.reward_bound = (params.lambda0 * (params.Q - 1)
                             + params.beta_R * (params.Q - 1)
                             + params.lambda_R)
        self._qualities = np.arange(params.Q, dtype=np.float64)
        self._check_sizes()

    @property
    def encoding_dim(self) -> int:
        return 1

    def mean_quality(self, mu: NDArray) -> float:
        return float(np.dot(self._qualities, mu))

    def headroom(self, xs: NDArray, mean_quality: float) -> NDArray[np.float64]:
        """Scale of the quality increment; clamped at zero for mean_quality > Q"""
        raw = (self.Q - 1 - np.asarray(xs, dtype=np.float64)) * (1.0 - mean_quality / self.Q)
        return np.maximum(raw, 0.0)

    def price(self, mean_quality: float) -> float:
        return self.params.lambda0 * (1.0 - self.params.lambda1 * mean_quality / self.Q)

    def step_quality(self, xs: NDArray, us: NDArray, mean_quality: float,
                     chi: NDArray) -> NDArray[np.int64]:
        """Quality update for given uniform variates chi"""
        xs = np.asarray(xs, dtype=np.int64)
        increment = np.floor(np.asarray(chi) * self.headroom(xs, mean_quality)).astype(np.int64)
        return np.where(np.asarray(us) == 1, xs + increment, xs)

    # -- hooks ---------------------------------------------------------------

    def local_kernel(self, mu: NDArray, g: GlobalState, nu: NDArray) -> NDArray[np.float64]:
        Q = self.Q
        kernel = np.zeros((Q, 2, Q))
        kernel[np.arange(Q), 0, np.arange(Q)] = 1.0
        heads = self.headroom(np.arange(Q), self.mean_quality(mu))
        for x in range(Q):
            h = heads[x]
            if h <= 0.0:
                kernel[x, 1, x] = 1.0
                continue
            whole = math.floor(h)
            kernel[x, 1, x:x + whole] = 1.0 / h
            if h > whole:
                kernel[x, 1, x + whole] = (h - whole) / h
        return kernel

    def sample_locals(self, xs, us, mu, g, nu, rng):
        chi = rng.random(len(xs))
        return self.step_quality(xs, us, self.mean_quality(mu), chi)

    def reward_table(self, mu: NDArray, g: GlobalState, nu: NDArray) -> NDArray[np.float64]:
        mean_quality = self.mean_quality(mu)
        revenue = g.value * self._qualities[:, None]
        cost = self.params.beta_R * mean_quality + self.params.lambda_R * np.array([0.0, 1.0])[None, :]
        return revenue - cost

    def global_law(self, mu: NDArray, g: GlobalState, nu: NDArray) -> GlobalLaw:
        return GlobalLaw.point_mass(GlobalState.scalar(self.price(self.mean_quality(mu))))

    def encode(self, g: GlobalState) -> NDArray[np.float64]:
        return np.array([g.value / self.params.lambda0])

    def validate_global(self, g: GlobalState) -> GlobalState:
        super().validate_global(g)
        if abs(g.value) > self.params.lambda0:
            raise ArgumentError(f"price alpha={g.value} exceeds lambda0={self.params.lambda0} in magnitude")
        return g

    def initial_global(self) -> GlobalState:
        return GlobalState.scalar(self.params.lambda0)


def firm_env_make(params: FirmEnvParams) -> FirmInvestmentEnv:
    return FirmInvestmentEnv(params)
