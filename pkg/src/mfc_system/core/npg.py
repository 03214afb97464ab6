"""
Natural policy gradient for the mean-field control problem.

Each outer iteration solves the compatible-function-approximation regression by
plain SGD on fresh occupancy samples, then steps the policy weights along the
averaged solution w and clips them back into [-W_max, W_max].
"""

from dataclasses import dataclass, field
import time
from typing import Callable, Iterator, List, Optional

import numpy as np
from numpy.typing import NDArray

from mfc_system.core.meanfield import MeanFieldStep, estimate_value_mfc_mc, mean_field_step
from mfc_system.core.policy import PolicyParams, clip_weights, log_prob_grad
from mfc_system.envs.base import Environment, GlobalState
from mfc_system.exceptions import ArgumentError, MFCError, NumericError, TrainingAborted
from mfc_system.models.results import ValueEstimate
from mfc_system.models.schemas import NPGConfig
from mfc_system.utils.helpers import as_simplex, check_gamma, check_index, sample_categorical
from mfc_system.utils.logger import get_logger
from mfc_system.utils.seeding import derive_rng

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class OccupancySample:
    """(x_T, mu_T, g_T, u_T) drawn from the discounted occupancy measure, with A-hat"""
    x: int
    mu: NDArray[np.float64]
    g: GlobalState
    u: int
    advantage_estimate: float
    T: int
    truncated: bool = False


@dataclass
class SamplerDiagnostics:
    samples: int = 0
    truncated: int = 0

    def record(self, sample: OccupancySample):
        self.samples += 1
        self.truncated += int(sample.truncated)


class _Walker:
    """Representative agent moving through the mean-field chain under a fixed policy"""

    def __init__(self, env: Environment, phi: PolicyParams, x: int, mu: NDArray,
                 g: GlobalState, rng: np.random.Generator):
        self.env = env
        self.phi = phi
        self.rng = rng
        self.x = x
        self.mu = mu
        self.g = g
        self.step: MeanFieldStep = mean_field_step(env, mu, g, phi)

    def draw_action(self) -> int:
        return sample_categorical(self.step.pi[self.x], self.rng)

    def reward(self, u: int) -> float:
        return float(self.step.rewards[self.x, u])

    def advance(self, u: int):
        env, step = self.env, self.step
        self.x = int(env.sample_locals(np.array([self.x]), np.array([u]), self.mu,
                                       self.g, step.nu, self.rng)[0])
        if len(step.law.support) == 1:
            self.g = step.law.support[0]
        else:
            self.g = step.law.support[sample_categorical(step.law.weights, self.rng)]
        self.mu = step.mu_next
        self.step = mean_field_step(env, self.mu, self.g, self.phi)


def sample_occupancy(env: Environment, phi: PolicyParams, mu0, g0: GlobalState,
                     gamma: float, rng: np.random.Generator, horizon_cap: int = 10_000,
                     diagnostics: Optional[SamplerDiagnostics] = None,
                     x0: Optional[int] = None) -> OccupancySample:
    """
    Draw one occupancy sample and an unbiased advantage estimate.

    The stopping check comes before every transition, so P(T = t) = (1 - gamma) gamma^t
    including t = 0. The continuation sums undiscounted rewards over a geometric
    length, starting with the reward at (x_T, u_T) on the Q branch or at a freshly
    drawn action on the V branch.
    """
    check_gamma(gamma)
    if horizon_cap < 1:
        raise ArgumentError(f"horizon_cap={horizon_cap} must be >= 1")
    mu0 = as_simplex(mu0, "mu0", env.local_state_count)
    env.validate_global(g0)
    if x0 is None:
        x0 = sample_categorical(mu0, rng)
    else:
        x0 = check_index(x0, env.local_state_count, "x0")

    walker = _Walker(env, phi, x0, mu0, g0, rng)
    u = walker.draw_action()
    T = 0
    truncated = False
    while rng.random() < gamma:
        if T >= horizon_cap:
            truncated = True
            break
        walker.advance(u)
        u = walker.draw_action()
        T += 1
    x_T, mu_T, g_T, u_T = walker.x, walker.mu, walker.g, u

    q_branch = rng.random() < 0.5
    action = u_T if q_branch else walker.draw_action()
    total = walker.reward(action)
    terms = 1
    while rng.random() < gamma:
        if terms >= horizon_cap:
            truncated = True
            break
        walker.advance(action)
        action = walker.draw_action()
        total += walker.reward(action)
        terms += 1

    q_hat, v_hat = (total, 0.0) if q_branch else (0.0, total)
    sample = OccupancySample(x_T, mu_T, g_T, u_T, 2.0 * (q_hat - v_hat), T, truncated)
    if truncated:
        logger.debug(f"Occupancy sample truncated at horizon_cap={horizon_cap}")
    if diagnostics is not None:
        diagnostics.record(sample)
    return sample


def solve_w_sgd(env: Environment, phi: PolicyParams, mu0, g0: GlobalState, alpha: float,
                inner_iters: int, gamma: float, rng: np.random.Generator,
                horizon_cap: int = 10_000,
                diagnostics: Optional[SamplerDiagnostics] = None) -> NDArray[np.float64]:
    """Averaged SGD iterate for min_w E[(A/(1-gamma) - w . grad log pi)^2], from w = 0"""
    if not alpha > 0:
        raise ArgumentError(f"alpha={alpha} must be positive")
    if inner_iters < 1:
        raise ArgumentError(f"inner_iters={inner_iters} must be >= 1")
    check_gamma(gamma)

    w = np.zeros(phi.dim)
    running = np.zeros(phi.dim)
    for l in range(1, inner_iters + 1):
        sample = sample_occupancy(env, phi, mu0, g0, gamma, rng, horizon_cap, diagnostics)
        score = log_prob_grad(phi, sample.x, sample.mu, env.encode(sample.g), sample.u)
        h = (w @ score - sample.advantage_estimate / (1.0 - gamma)) * score
        w = w - alpha * h
        if not np.all(np.isfinite(w)):
            raise NumericError(f"non-finite SGD iterate at inner iteration l={l}")
        running += w
    return running / inner_iters


# -- training loop ------------------------------------------------------------------

@dataclass(frozen=True)
class TraceRecord:
    j: int
    value_mean: float
    value_stderr: float
    w_norm: float
    wall_time: float


@dataclass
class TrainingTrace:
    """Policies Phi_1..Phi_J with the step norms and value estimates that produced them"""
    initial: PolicyParams
    policies: List[PolicyParams] = field(default_factory=list)
    w_norms: List[float] = field(default_factory=list)
    values: List[ValueEstimate] = field(default_factory=list)
    wall_times: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.policies)

    def append(self, phi: PolicyParams, w_norm: float, value: ValueEstimate, wall_time: float):
        self.policies.append(phi)
        self.w_norms.append(w_norm)
        self.values.append(value)
        self.wall_times.append(wall_time)

    @property
    def final_policy(self) -> PolicyParams:
        return self.policies[-1] if self.policies else self.initial

    def records(self) -> Iterator[TraceRecord]:
        for j, (norm, value, wall) in enumerate(zip(self.w_norms, self.values, self.wall_times), 1):
            yield TraceRecord(j, value.mean, value.stderr, norm, wall)


def npg_run(env: Environment, phi0: PolicyParams, mu0, g0: GlobalState, config: NPGConfig,
            eval_horizon: Optional[int] = None, record_wall_time: bool = False,
            on_record: Optional[Callable[[TraceRecord], None]] = None) -> TrainingTrace:
    """
    Run J natural policy gradient updates. Iteration j draws from its own substream
    keyed by (master_seed, j), so identical configs give identical traces.
    """
    mu0 = as_simplex(mu0, "mu0", env.local_state_count)
    env.validate_global(g0)
    trace = TrainingTrace(initial=clip_weights(phi0))
    diagnostics = SamplerDiagnostics()
    phi = trace.initial

    logger.info(f"Starting NPG on {env.name}: J={config.outer_iters}, L={config.inner_iters}, "
                f"eta={config.eta}, alpha={config.alpha}, gamma={config.gamma}")
    for j in range(config.outer_iters):
        started = time.perf_counter()
        try:
            w = solve_w_sgd(env, phi, mu0, g0, config.alpha, config.inner_iters, config.gamma,
                            derive_rng(config.master_seed, "npg", j), config.horizon_cap,
                            diagnostics)
            phi = clip_weights(phi.with_theta(phi.flat() + config.eta * w))
            value = estimate_value_mfc_mc(env, phi, mu0, g0, config.gamma, eval_horizon,
                                          config.eval_rollouts,
                                          derive_rng(config.master_seed, "npg-eval", j))
        except MFCError as e:
            logger.error(f"NPG aborted at outer iteration {j + 1}: {e}")
            raise TrainingAborted(f"training aborted at outer iteration {j + 1}: {e}", trace) from e

        wall = time.perf_counter() - started if record_wall_time else 0.0
        w_norm = float(np.linalg.norm(w))
        trace.append(phi, w_norm, value, wall)
        logger.info(f"NPG iteration {j + 1}/{config.outer_iters}: "
                    f"value={value.mean:.4f} (+/- {value.stderr:.2e}), |w|={w_norm:.4f}")
        if on_record is not None:
            on_record(TraceRecord(j + 1, value.mean, value.stderr, w_norm, wall))

    if diagnostics.truncated:
        logger.warning(f"{diagnostics.truncated} of {diagnostics.samples} occupancy samples "
                       f"hit horizon_cap={config.horizon_cap}")
    return trace
