"""Mean-Field Control Toolkit - CLI Entry Point"""

from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from mfc_system.config import settings
from mfc_system.core.bounds import (
    bound_rows,
    theorem1_constants,
    theorem2_constants,
    validity_failures,
)
from mfc_system.core.meanfield import enumerate_value_mfc, estimate_value_mfc_mc
from mfc_system.core.nagent import estimate_value_nagent, sample_initial_locals
from mfc_system.core.npg import TrainingTrace, npg_run
from mfc_system.core.policy import PolicyParams, policy_for_env
from mfc_system.core.sweep import check_policy_fits, initial_distribution, run_error_sweep
from mfc_system.envs import make_env
from mfc_system.exceptions import (
    ArgumentError,
    ArtifactError,
    BoundValidityError,
    ConfigError,
    MFCError,
    TrainingAborted,
)
from mfc_system.models.schemas import (
    SUMMARY_HEADER,
    SWEEP_HEADER,
    ExperimentConfig,
    LipschitzConstants,
)
from mfc_system.utils.helpers import default_horizon
from mfc_system.utils.logger import setup_logging
from mfc_system.utils.persistence import (
    load_config,
    load_policy,
    persist_run,
    save_policy,
    save_trace,
)
from mfc_system.utils.seeding import derive_rng

app = typer.Typer(help=settings.PROJECT_NAME, no_args_is_help=True)
console = Console()

EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _format_validation(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        where = ".".join(str(part) for part in item["loc"]) or "config"
        lines.append(f"{where}: {item['msg']}")
    return "invalid configuration\n  " + "\n  ".join(lines)


def _fail(message: str, code: int):
    console.print(f"[red]❌ {escape(message)}[/red]")
    raise typer.Exit(code)


@contextmanager
def handled_errors():
    """Map toolkit errors to exit codes: 1 for bad input, 2 for runtime failures"""
    try:
        yield
    except typer.Exit:
        raise
    except ValidationError as e:
        _fail(_format_validation(e), EXIT_VALIDATION)
    except ConfigError as e:
        where = f"{e.field}: " if e.field else ""
        _fail(f"{where}{e}", EXIT_VALIDATION)
    except ArgumentError as e:
        _fail(str(e), EXIT_VALIDATION)
    except TrainingAborted as e:
        _fail(f"{e} ({len(e.trace)} completed iterations kept)", EXIT_RUNTIME)
    except (MFCError, OSError) as e:
        _fail(str(e), EXIT_RUNTIME)


def _with_seed(config: ExperimentConfig, seed: Optional[int]) -> ExperimentConfig:
    if seed is None:
        return config
    return config.model_copy(update={"train": config.train.model_copy(update={"master_seed": seed})})


def _out_dir(config: ExperimentConfig, out: Optional[Path]) -> Path:
    if out is not None:
        target = out
    elif config.output.dir is not None:
        target = Path(config.output.dir)
    else:
        target = settings.RUNS_DIR
    target.mkdir(parents=True, exist_ok=True)
    return target


def _initial_policy(config: ExperimentConfig, env) -> PolicyParams:
    p = config.policy
    cap = p.weight_cap if p.weight_cap is not None else settings.DEFAULT_WEIGHT_CAP
    return policy_for_env(env, cap, p.init_scheme, p.init_scale, p.init_seed)


def _resolve_policy(config: ExperimentConfig, env, policy_path: Optional[Path],
                    required: bool) -> PolicyParams:
    path = policy_path or (Path(config.output.policy_artifact) if config.output.policy_artifact else None)
    if path is None:
        if required:
            raise ArtifactError("no policy artifact given; run `train` or pass --policy")
        return _initial_policy(config, env)
    policy = load_policy(path)
    check_policy_fits(policy, env)
    return policy


@app.callback()
def cli(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
    log_file: bool = typer.Option(True, "--log-file/--no-log-file", help="Also log to LOGS_DIR"),
):
    """Shared-global-state mean-field control experiments"""
    setup_logging(verbose=verbose, log_to_file=log_file)


@app.command("validate-config")
def validate_config(config_path: Path = typer.Argument(..., help="TOML experiment file")):
    """Check an experiment file against the schema"""
    with handled_errors():
        config = load_config(config_path)
        env, g0 = make_env(config.env)
        initial_distribution(config, env)
    console.print(f"[green]✅ {escape(str(config_path))} is valid[/green] "
                  f"(env={env.name}, |X|={env.local_state_count}, |U|={env.action_count})")


@app.command()
def train(
    config_path: Path = typer.Argument(..., help="TOML experiment file"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override train.master_seed"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory"),
):
    """Run natural policy gradient and persist the trace and final policy"""
    with handled_errors():
        config = _with_seed(load_config(config_path), seed)
        env, g0 = make_env(config.env)
        mu0 = initial_distribution(config, env)
        phi0 = _initial_policy(config, env)
        out_dir = _out_dir(config, out)
        master_seed = config.train.master_seed

        console.print(Panel.fit(f"🧠 NPG on {env.name}", style="bold cyan"))
        try:
            with console.status("Training..."):
                trace = npg_run(env, phi0, mu0, g0, config.train, config.eval.horizon,
                                config.output.record_wall_time)
        except TrainingAborted as e:
            save_trace(e.trace, out_dir / "trace.csv", config, master_seed)
            raise
        save_trace(trace, out_dir / "trace.csv", config, master_seed)
        save_policy(trace.final_policy, out_dir / "policy.json", config, master_seed)
    _print_trace(trace)
    console.print(f"[green]✅ Wrote {escape(str(out_dir))}/trace.csv and policy.json[/green]")


def _print_trace(trace: TrainingTrace, last: int = 10):
    table = Table(title="Training trace")
    for column in ("j", "value", "stderr", "|w|"):
        table.add_column(column, justify="right")
    for record in list(trace.records())[-last:]:
        table.add_row(str(record.j), f"{record.value_mean:.5f}", f"{record.value_stderr:.2e}",
                      f"{record.w_norm:.4f}")
    console.print(table)


@app.command("simulate-nagent")
def simulate_nagent(
    config_path: Path = typer.Argument(..., help="TOML experiment file"),
    agents: int = typer.Option(100, "--agents", "-n", min=1, help="Population size N"),
    policy_path: Optional[Path] = typer.Option(None, "--policy", help="Policy artifact"),
    seed: Optional[int] = typer.Option(None, "--seed"),
):
    """Estimate V_N by Monte-Carlo rollouts from x_0 drawn i.i.d. from mu_0"""
    with handled_errors():
        config = _with_seed(load_config(config_path), seed)
        env, g0 = make_env(config.env)
        mu0 = initial_distribution(config, env)
        policy = _resolve_policy(config, env, policy_path, required=False)
        rng = derive_rng(config.train.master_seed, agents, "simulate-nagent")
        locals_ = sample_initial_locals(mu0, agents, rng)
        estimate = estimate_value_nagent(env, policy, locals_, g0, config.eval.gamma,
                                         config.eval.horizon, config.eval.rollouts, rng)
    _print_estimate(f"V_N (N={agents})", estimate.to_dict())


@app.command("simulate-mfc")
def simulate_mfc(
    config_path: Path = typer.Argument(..., help="TOML experiment file"),
    policy_path: Optional[Path] = typer.Option(None, "--policy", help="Policy artifact"),
    exact: bool = typer.Option(False, "--exact", help="Enumerate global paths instead of sampling"),
    seed: Optional[int] = typer.Option(None, "--seed"),
):
    """Evaluate the mean-field value V_inf"""
    with handled_errors():
        config = _with_seed(load_config(config_path), seed)
        env, g0 = make_env(config.env)
        mu0 = initial_distribution(config, env)
        policy = _resolve_policy(config, env, policy_path, required=False)
        horizon = config.eval.horizon or default_horizon(config.eval.gamma)
        if exact:
            result = enumerate_value_mfc(env, policy, mu0, g0, config.eval.gamma, horizon)
            values = {"value": result.value, "paths": result.paths,
                      "dropped_mass": result.dropped_mass, "horizon": result.horizon}
        else:
            rng = derive_rng(config.train.master_seed, "simulate-mfc")
            values = estimate_value_mfc_mc(env, policy, mu0, g0, config.eval.gamma, horizon,
                                           config.eval.rollouts, rng).to_dict()
    _print_estimate("V_inf", values)


def _print_estimate(title: str, values: dict):
    table = Table(title=title)
    table.add_column("quantity")
    table.add_column("value", justify="right")
    for key, value in values.items():
        table.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
    console.print(table)


@app.command("error-sweep")
def error_sweep(
    config_path: Path = typer.Argument(..., help="TOML experiment file"),
    policy_path: Optional[Path] = typer.Option(None, "--policy", help="Trained policy artifact"),
    workers: Optional[int] = typer.Option(None, "--workers", min=1,
                                          help="Parallel worker processes (default: WORKER_COUNT)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override train.master_seed"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory"),
):
    """|V_N - V_inf| over the N grid and seeds; writes sweep.csv and sweep_summary.csv"""
    with handled_errors():
        config = _with_seed(load_config(config_path), seed)
        env, _ = make_env(config.env)
        policy = _resolve_policy(config, env, policy_path, required=True)
        out_dir = _out_dir(config, out)
        master_seed = config.train.master_seed
        with console.status(f"Running {len(config.sweep.n_grid) * config.sweep.seeds} cells..."):
            rows, summary = run_error_sweep(config, policy, master_seed,
                                            workers if workers is not None else settings.WORKER_COUNT)
        persist_run(rows, SWEEP_HEADER, out_dir / "sweep.csv", config, master_seed, "sweep")
        persist_run(summary, SUMMARY_HEADER, out_dir / "sweep_summary.csv", config, master_seed,
                    "sweep-summary")

    table = Table(title="Error vs N")
    for column in ("N", "seeds", "mean error", "std", "e(N)"):
        table.add_column(column, justify="right")
    for s in summary:
        table.add_row(str(s.N), str(s.seeds), f"{s.error_mean:.5f}", f"{s.error_std:.5f}",
                      f"{s.error_scale:.4f}")
    console.print(table)
    console.print(f"[green]✅ Wrote {len(rows)} rows to {escape(str(out_dir))}/sweep.csv[/green]")


@app.command()
def bounds(
    M: float = typer.Option(..., "--M", help="Reward bound"),
    L_R: float = typer.Option(0.0, "--L-R"),
    L_P: float = typer.Option(0.0, "--L-P"),
    L_G: float = typer.Option(0.0, "--L-G"),
    L_Q: float = typer.Option(0.0, "--L-Q"),
    gamma: float = typer.Option(..., "--gamma"),
    n: List[int] = typer.Option([100], "--N", help="Population sizes (repeatable)"),
    x_size: int = typer.Option(..., "--x-size", help="|X|"),
    u_size: int = typer.Option(..., "--u-size", help="|U|"),
    limit: bool = typer.Option(False, "--limit", help="Use the analytic limit when S_P or Q_P equals 1"),
):
    """Evaluate both approximation-error bounds"""
    with handled_errors():
        constants = LipschitzConstants(M=M, L_R=L_R, L_P=L_P, L_G=L_G, L_Q=L_Q)
        k1 = theorem1_constants(constants)
        k2 = theorem2_constants(constants)
        failures = validity_failures(constants, gamma)
        if len(failures) == 2:
            raise BoundValidityError("; ".join(failures.values()))
        rows = bound_rows(constants, gamma, n, x_size, u_size, "limit" if limit else "raise",
                          skip_invalid=True)

    console.print(f"S_P={k1.S_P:g}  S_R={k1.S_R:g}  S_G={k1.S_G:g}  C_P={k1.C_P:g}  "
                  f"Q_P={k2.Q_P:g}  Q_R={k2.Q_R:g}")
    table = Table(title=f"Approximation error bounds (gamma={gamma})")
    for column in ("N", "e(N)", "action-dependent", "action-free"):
        table.add_column(column, justify="right")
    for row in rows:
        table.add_row(str(row["N"]), f"{row['error_scale']:.6g}", _bound_cell(row["theorem1"]),
                      _bound_cell(row["theorem2"]))
    console.print(table)
    if failures:
        _fail("; ".join(failures.values()), EXIT_RUNTIME)


def _bound_cell(value: Optional[float]) -> str:
    return "invalid" if value is None else f"{value:.6g}"


def main():
    app()


if __name__ == "__main__":
    main()
