"""
Helper utilities: simplex validation, categorical sampling, discount arithmetic
"""

import math
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from mfc_system.config import settings
from mfc_system.exceptions import ArgumentError, DistributionError


def as_simplex(weights: Sequence[float] | NDArray, name: str = "distribution",
               size: Optional[int] = None, tol: Optional[float] = None) -> NDArray[np.float64]:
    """Validate a probability vector and return it as a float64 array"""
    tol = settings.SIMPLEX_TOL if tol is None else tol
    arr = np.asarray(weights, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ArgumentError(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if size is not None and arr.size != size:
        raise ArgumentError(f"{name} has length {arr.size}, expected {size}")
    if not np.all(np.isfinite(arr)):
        raise DistributionError(f"{name} contains non-finite entries")
    if arr.min() < -tol:
        raise DistributionError(f"{name} has a negative entry {arr.min():.3e}")
    total = math.fsum(arr)
    if abs(total - 1.0) > tol:
        raise DistributionError(f"{name} sums to {total!r}, not 1")
    return arr


def is_simplex(weights: NDArray, tol: float = 1e-10) -> bool:
    arr = np.asarray(weights, dtype=np.float64)
    return bool(arr.ndim == 1 and np.all(arr >= -tol) and abs(math.fsum(arr) - 1.0) <= tol)


def check_index(value: int, bound: int, name: str) -> int:
    if not 0 <= int(value) < bound:
        raise ArgumentError(f"{name}={value} outside [0, {bound})")
    return int(value)


def sample_rows(probabilities: NDArray, rng: np.random.Generator) -> NDArray[np.int64]:
    """Draw one category per row of a (n, k) row-stochastic matrix by inverse CDF"""
    probs = np.atleast_2d(probabilities)
    cdf = np.cumsum(probs, axis=1)
    draws = rng.random(probs.shape[0])[:, None]
    # the last column absorbs round-off in the cumulative sum
    return np.minimum((draws >= cdf).sum(axis=1), probs.shape[1] - 1)


def sample_categorical(probabilities: NDArray, rng: np.random.Generator) -> int:
    return int(sample_rows(np.asarray(probabilities)[None, :], rng)[0])


def check_gamma(gamma: float) -> float:
    if not 0.0 < gamma < 1.0:
        raise ArgumentError(f"gamma={gamma} must lie in (0, 1)")
    return float(gamma)


def tail_bound(reward_bound: float, gamma: float, horizon: int) -> float:
    """Largest possible contribution of the discounted sum beyond the horizon"""
    return reward_bound * gamma ** horizon / (1.0 - gamma)


def default_horizon(gamma: float, fraction: Optional[float] = None) -> int:
    """Smallest H with gamma^H / (1 - gamma) < fraction"""
    check_gamma(gamma)
    fraction = settings.TAIL_FRACTION if fraction is None else fraction
    horizon = math.ceil(math.log(fraction * (1.0 - gamma)) / math.log(gamma))
    while gamma ** horizon / (1.0 - gamma) >= fraction:
        horizon += 1
    return max(horizon, 1)


def discounted_sum(rewards: Sequence[float], gamma: float) -> float:
    return math.fsum(gamma ** t * r for t, r in enumerate(rewards))


def mean_and_stderr(samples: Sequence[float]) -> tuple[float, float]:
    n = len(samples)
    mean = math.fsum(samples) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((s - mean) ** 2 for s in samples) / (n - 1)
    return mean, math.sqrt(var / n)
