"""
Error-versus-N experiment: |V_N - V_inf| over a grid of population sizes and seeds.

Each (N, seed) cell is an independent job whose random stream is keyed by
(master_seed, N, seed, "sweep"), so results do not depend on the worker count.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import math
import time
from typing import List, Optional, Sequence, Tuple

import numpy as np

from mfc_system.config import settings
from mfc_system.core.bounds import error_scale
from mfc_system.core.meanfield import estimate_value_mfc_mc, exact_value_mfc
from mfc_system.core.nagent import empirical_state_dist, estimate_value_nagent, sample_initial_locals
from mfc_system.core.policy import PolicyParams
from mfc_system.envs import make_env
from mfc_system.envs.base import Environment, GlobalState
from mfc_system.exceptions import ArtifactError, ConfigError
from mfc_system.models.schemas import ExperimentConfig, SweepResultRow, SweepSummaryRow
from mfc_system.utils.helpers import as_simplex, default_horizon
from mfc_system.utils.logger import get_logger
from mfc_system.utils.seeding import derive_rng

logger = get_logger(__name__)


def initial_distribution(config: ExperimentConfig, env: Environment) -> np.ndarray:
    """eval.mu0 when given, otherwise uniform over local states"""
    if config.eval.mu0 is None:
        return np.full(env.local_state_count, 1.0 / env.local_state_count)
    if len(config.eval.mu0) != env.local_state_count:
        raise ConfigError(
            f"eval.mu0 has {len(config.eval.mu0)} entries but the environment has "
            f"{env.local_state_count} local states", "eval.mu0"
        )
    return as_simplex(config.eval.mu0, "eval.mu0")


def check_policy_fits(policy: PolicyParams, env: Environment):
    if (policy.state_count, policy.action_count, policy.encoding_dim) != (
            env.local_state_count, env.action_count, env.encoding_dim):
        raise ArtifactError(
            f"policy dimensions (|X|={policy.state_count}, |U|={policy.action_count}, "
            f"enc={policy.encoding_dim}) do not match environment {env.name}"
        )


def mean_field_value(env: Environment, policy: PolicyParams, mu0, g0: GlobalState,
                     gamma: float, horizon: int, rollouts: int, rng: np.random.Generator) -> float:
    """V_inf by a single deterministic pass, exact enumeration, or Monte-Carlo as a fallback"""
    if env.global_deterministic:
        return estimate_value_mfc_mc(env, policy, mu0, g0, gamma, horizon).mean
    if horizon * math.log(env.global_support_size) <= math.log(settings.ENUMERATION_CAP):
        return exact_value_mfc(env, policy, mu0, g0, gamma, horizon)
    return estimate_value_mfc_mc(env, policy, mu0, g0, gamma, horizon, rollouts, rng).mean


@dataclass(frozen=True)
class SweepCell:
    N: int
    seed: int


def run_cell(config: ExperimentConfig, policy: PolicyParams, cell: SweepCell,
             master_seed: int) -> SweepResultRow:
    started = time.perf_counter()
    env, g0 = make_env(config.env)
    mu0 = initial_distribution(config, env)
    gamma = config.eval.gamma
    horizon = config.eval.horizon or default_horizon(gamma)
    rng = derive_rng(master_seed, cell.N, cell.seed, "sweep")

    locals_ = sample_initial_locals(mu0, cell.N, rng)
    mu0_n = empirical_state_dist(locals_, env.local_state_count).weights
    v_n = estimate_value_nagent(env, policy, locals_, g0, gamma, horizon, config.eval.rollouts, rng)
    v_inf = mean_field_value(env, policy, mu0_n, g0, gamma, horizon, config.eval.rollouts, rng)

    wall = time.perf_counter() - started if config.output.record_wall_time else 0.0
    return SweepResultRow(
        N=cell.N,
        seed=cell.seed,
        v_n_mean=v_n.mean,
        v_n_stderr=v_n.stderr,
        v_inf=v_inf,
        error=abs(v_n.mean - v_inf),
        wall_time=wall,
    )


def _run_cell_args(args: Tuple[ExperimentConfig, PolicyParams, SweepCell, int]) -> SweepResultRow:
    return run_cell(*args)


def summarize(rows: Sequence[SweepResultRow], x_size: int, u_size: int) -> List[SweepSummaryRow]:
    """Mean and sample standard deviation of the error per N, in grid order"""
    summary = []
    for N in sorted({row.N for row in rows}):
        errors = np.array([row.error for row in rows if row.N == N])
        std = float(np.std(errors, ddof=1)) if errors.size > 1 else 0.0
        summary.append(SweepSummaryRow(
            N=N,
            seeds=int(errors.size),
            error_mean=math.fsum(errors) / errors.size,
            error_std=std,
            error_scale=error_scale(N, x_size, u_size),
        ))
    return summary


def run_error_sweep(config: ExperimentConfig, policy: PolicyParams,
                    master_seed: Optional[int] = None,
                    workers: int = 1) -> Tuple[List[SweepResultRow], List[SweepSummaryRow]]:
    """Run every (N, seed) cell; rows come back sorted by (N, seed) regardless of workers"""
    master_seed = config.train.master_seed if master_seed is None else master_seed
    env, _ = make_env(config.env)
    check_policy_fits(policy, env)
    initial_distribution(config, env)

    cells = [SweepCell(N, seed) for N in sorted(config.sweep.n_grid)
             for seed in range(config.sweep.seeds)]
    logger.info(f"Error sweep on {env.name}: {len(cells)} cells, {workers} worker(s)")

    jobs = [(config, policy, cell, master_seed) for cell in cells]
    if workers <= 1:
        rows = [_run_cell_args(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(_run_cell_args, jobs))

    rows.sort(key=lambda row: (row.N, row.seed))
    summary = summarize(rows, env.local_state_count, env.action_count)
    for s in summary:
        logger.info(f"N={s.N}: error {s.error_mean:.4f} +/- {s.error_std:.4f} over {s.seeds} seeds")
    return rows, summary
