"""
Softmax-linear policy class over features of (x, mu, g).

The feature vector is one_hot(x) ++ mu ++ encode(g) ++ [1]; the policy is
pi(x, mu, g) = softmax(theta @ features). Weights are clamped to [-W_max, W_max],
which keeps the policy Lipschitz in mu.
"""

from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np
from numpy.typing import NDArray
from scipy.special import softmax

from mfc_system.exceptions import ArgumentError, NumericError
from mfc_system.utils.helpers import check_index
from mfc_system.utils.seeding import derive_rng


def feature_dim(state_count: int, encoding_dim: int) -> int:
    return 2 * state_count + encoding_dim + 1


@dataclass(frozen=True, eq=False)
class PolicyParams:
    """Weight matrix theta of shape (|U|, feature_dim) and its cap W_max"""
    theta: NDArray[np.float64]
    weight_cap: float
    state_count: int
    encoding_dim: int

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64)
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        if theta.ndim != 2 or theta.shape[1] != feature_dim(self.state_count, self.encoding_dim):
            raise ArgumentError(
                f"theta shape {theta.shape} inconsistent with |X|={self.state_count}, "
                f"encoding_dim={self.encoding_dim}"
            )
        if not self.weight_cap > 0:
            raise ArgumentError("weight_cap must be positive")

    @property
    def action_count(self) -> int:
        return self.theta.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.theta.shape[1]

    @property
    def dim(self) -> int:
        return self.theta.size

    @property
    def mu_block(self) -> slice:
        return slice(self.state_count, 2 * self.state_count)

    def with_theta(self, theta: NDArray) -> "PolicyParams":
        return replace(self, theta=np.reshape(theta, self.theta.shape))

    def flat(self) -> NDArray[np.float64]:
        """Row-major parameter vector (length d = |U| * feature_dim)"""
        return self.theta.ravel().copy()


def init_policy(state_count: int, action_count: int, encoding_dim: int,
                weight_cap: float = 10.0, scheme: str = "zeros",
                scale: float = 0.1, seed: int = 0) -> PolicyParams:
    shape = (action_count, feature_dim(state_count, encoding_dim))
    if scheme == "zeros":
        theta = np.zeros(shape)
    elif scheme == "normal":
        theta = derive_rng(seed, "policy-init").normal(0.0, scale, size=shape)
    else:
        raise ArgumentError(f"unknown init scheme {scheme!r}")
    return clip_weights(PolicyParams(theta, weight_cap, state_count, encoding_dim))


def policy_for_env(env, weight_cap: float = 10.0, scheme: str = "zeros",
                   scale: float = 0.1, seed: int = 0) -> PolicyParams:
    return init_policy(env.local_state_count, env.action_count, env.encoding_dim,
                       weight_cap, scheme, scale, seed)


# -- features and action laws ---------------------------------------------------

def features(x: int, mu: NDArray, g_code: NDArray) -> NDArray[np.float64]:
    mu = np.asarray(mu, dtype=np.float64)
    x = check_index(x, mu.size, "x")
    onehot = np.zeros(mu.size)
    onehot[x] = 1.0
    return np.concatenate([onehot, mu, np.asarray(g_code, dtype=np.float64), [1.0]])


def feature_matrix(mu: NDArray, g_code: NDArray) -> NDArray[np.float64]:
    """Rows are features(x, mu, g) for x = 0..|X|-1"""
    mu = np.asarray(mu, dtype=np.float64)
    X = mu.size
    g_code = np.asarray(g_code, dtype=np.float64)
    return np.hstack([
        np.eye(X),
        np.broadcast_to(mu, (X, X)),
        np.broadcast_to(g_code, (X, g_code.size)),
        np.ones((X, 1)),
    ])


def _check_dims(phi: PolicyParams, mu: NDArray, g_code: NDArray):
    if np.size(mu) != phi.state_count or np.size(g_code) != phi.encoding_dim:
        raise ArgumentError(
            f"inputs of size ({np.size(mu)}, {np.size(g_code)}) do not match policy "
            f"({phi.state_count}, {phi.encoding_dim})"
        )


def _softmax_rows(logits: NDArray) -> NDArray[np.float64]:
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite policy logits")
    return softmax(logits, axis=-1)


def action_dist(phi: PolicyParams, x: int, mu: NDArray, g_code: NDArray) -> NDArray[np.float64]:
    _check_dims(phi, mu, g_code)
    return _softmax_rows(phi.theta @ features(x, mu, g_code))


def action_table(phi: PolicyParams, mu: NDArray, g_code: NDArray) -> NDArray[np.float64]:
    """Array pi[x, u] for all local states at once"""
    _check_dims(phi, mu, g_code)
    return _softmax_rows(feature_matrix(mu, g_code) @ phi.theta.T)


def log_prob_grad(phi: PolicyParams, x: int, mu: NDArray, g_code: NDArray,
                  u: int) -> NDArray[np.float64]:
    """Score vector d/d(theta) log pi(x, mu, g)(u), flattened row-major"""
    u = check_index(u, phi.action_count, "u")
    feats = features(x, mu, g_code)
    _check_dims(phi, mu, g_code)
    probs = _softmax_rows(phi.theta @ feats)
    coeff = -probs
    coeff[u] += 1.0
    return np.outer(coeff, feats).ravel()


# -- weight cap and Lipschitz constant -------------------------------------------

def clip_weights(phi: PolicyParams) -> PolicyParams:
    cap = phi.weight_cap
    return phi.with_theta(np.clip(phi.theta, -cap, cap))


def lipschitz_constant_LQ(phi: PolicyParams) -> float:
    """
    Upper bound on |pi(x, mu1, g) - pi(x, mu2, g)|_1 / |mu1 - mu2|_1.

    The softmax moves by at most half the spread of the logit change in L1, and the
    spread of the logit change is at most max_j (max_a theta[a, j] - min_a theta[a, j])
    times |mu1 - mu2|_1 over the mu-block. Never exceeds W_max.
    """
    block = phi.theta[:, phi.mu_block]
    if block.shape[0] < 2:
        return 0.0
    return float(0.5 * (block.max(axis=0) - block.min(axis=0)).max())


def empirical_fisher(scores: Iterable[NDArray]) -> NDArray[np.float64]:
    """Average outer product of score vectors"""
    stacked = np.asarray(list(scores), dtype=np.float64)
    if stacked.ndim != 2 or stacked.shape[0] == 0:
        raise ArgumentError("empirical_fisher needs a non-empty list of equal-length vectors")
    return stacked.T @ stacked / stacked.shape[0]
