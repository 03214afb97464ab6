"""
Pydantic schemas for configuration validation and persisted records
"""

import math
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class StrictModel(BaseModel):
    """Base for config blocks: unknown keys are rejected"""
    model_config = ConfigDict(extra="forbid", frozen=True)


class LipschitzConstants(StrictModel):
    """Reward bound and Lipschitz constants of r, P, P_G and the policy class"""
    M: float = Field(..., gt=0.0, description="Reward bound")
    L_R: float = Field(0.0, ge=0.0, description="Reward Lipschitz constant")
    L_P: float = Field(0.0, ge=0.0, description="Local kernel Lipschitz constant")
    L_G: float = Field(0.0, ge=0.0, description="Global kernel Lipschitz constant")
    L_Q: float = Field(0.0, ge=0.0, description="Policy Lipschitz constant in mu")

    @model_validator(mode="after")
    def check_finite(self):
        for name in ("M", "L_R", "L_P", "L_G", "L_Q"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        return self


class FirmEnvParams(StrictModel):
    """Firm investment model parameters"""
    Q: int = Field(10, ge=2, description="Number of quality levels")
    lambda0: float = Field(1.0, gt=0.0, description="Base price per unit quality")
    lambda1: float = Field(0.5, ge=0.0, le=2.0,
                           description="Price sensitivity to mean quality; at most 2 keeps |alpha| <= lambda0")
    beta_R: float = Field(0.5, ge=0.0, description="Cost of mean quality")
    lambda_R: float = Field(0.5, ge=0.0, description="Investment cost")

    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        json_schema_extra={
            "example": {"Q": 10, "lambda0": 1.0, "lambda1": 0.5, "beta_R": 0.5, "lambda_R": 0.5}
        },
    )


class NPGConfig(StrictModel):
    """Natural policy gradient hyper-parameters"""
    eta: float = Field(0.1, ge=0.0, description="Outer step size; 0 leaves the policy fixed")
    alpha: float = Field(0.005, gt=0.0, description="Inner SGD step size")
    outer_iters: int = Field(50, ge=1, description="Number of NPG updates J")
    inner_iters: int = Field(500, ge=1, description="SGD steps per update L")
    gamma: float = Field(0.9, gt=0.0, lt=1.0, description="Discount factor")
    master_seed: int = Field(0, ge=0)
    horizon_cap: int = Field(10_000, ge=1, description="Cap on geometric rollout lengths")
    eval_rollouts: int = Field(100, ge=1, description="Rollouts per value estimate in the trace")


# -- environment blocks ---------------------------------------------------------

class FirmEnvConfig(StrictModel):
    kind: Literal["firm"] = "firm"
    params: FirmEnvParams = FirmEnvParams()
    alpha0: Optional[float] = Field(None, description="Initial price; defaults to lambda0")


class RandomEnvConfig(StrictModel):
    kind: Literal["random"] = "random"
    states: int = Field(2, ge=1)
    actions: int = Field(2, ge=1)
    globals_: int = Field(2, ge=1, alias="globals")
    seed: int = Field(0, ge=0)
    mean_field: bool = True
    g0: int = Field(0, ge=0)

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @model_validator(mode="after")
    def check_g0(self):
        if self.g0 >= self.globals_:
            raise ValueError(f"g0={self.g0} outside [0, {self.globals_})")
        return self


class ConstantEnvConfig(StrictModel):
    kind: Literal["constant"] = "constant"
    states: int = Field(2, ge=1)
    actions: int = Field(2, ge=1)
    reward: float = 0.0


EnvConfig = Annotated[Union[FirmEnvConfig, RandomEnvConfig, ConstantEnvConfig],
                      Field(discriminator="kind")]


class PolicyConfig(StrictModel):
    weight_cap: Optional[float] = Field(None, gt=0.0,
                                        description="Bound W_max on every weight; settings default if unset")
    init_scheme: Literal["zeros", "normal"] = "zeros"
    init_scale: float = Field(0.1, ge=0.0)
    init_seed: int = Field(0, ge=0)


class EvalConfig(StrictModel):
    gamma: float = Field(0.9, gt=0.0, lt=1.0)
    horizon: Optional[int] = Field(None, ge=1, description="Defaults to the tail-bound rule")
    rollouts: int = Field(20, ge=1, description="Rollouts per V_N estimate")
    mu0: Optional[List[float]] = Field(None, description="Initial local-state law; uniform if unset")

    @field_validator("mu0")
    @classmethod
    def validate_mu0(cls, v):
        if v is None:
            return v
        if any(p < 0 for p in v) or abs(math.fsum(v) - 1.0) > 1e-9:
            raise ValueError("mu0 must be a probability vector")
        return v


class SweepConfig(StrictModel):
    n_grid: List[int] = Field(default_factory=lambda: [50, 100, 200, 500, 1000])
    seeds: int = Field(25, ge=1)

    @field_validator("n_grid")
    @classmethod
    def validate_grid(cls, v: List[int]) -> List[int]:
        if not v or any(n < 1 for n in v):
            raise ValueError("n_grid must be a non-empty list of positive integers")
        if len(set(v)) != len(v):
            raise ValueError("n_grid entries must be distinct")
        return v


class OutputConfig(StrictModel):
    dir: Optional[str] = Field(None, description="Output directory; settings RUNS_DIR if unset")
    policy_artifact: Optional[str] = None
    record_wall_time: bool = False


class ExperimentConfig(StrictModel):
    """Complete experiment description loaded from a TOML file"""
    env: EnvConfig = FirmEnvConfig()
    policy: PolicyConfig = PolicyConfig()
    train: NPGConfig = NPGConfig()
    eval: EvalConfig = EvalConfig()
    sweep: SweepConfig = SweepConfig()
    output: OutputConfig = OutputConfig()


# -- persisted rows -----------------------------------------------------------------

class SweepResultRow(BaseModel):
    """One (N, seed) cell of the error-versus-N experiment"""
    N: int = Field(..., ge=1)
    seed: int = Field(..., ge=0)
    v_n_mean: float
    v_n_stderr: float = Field(..., ge=0.0)
    v_inf: float
    error: float = Field(..., ge=0.0)
    wall_time: float = Field(0.0, ge=0.0)

    @model_validator(mode="after")
    def check_finite(self):
        for name in ("v_n_mean", "v_n_stderr", "v_inf", "error", "wall_time"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        return self


class SweepSummaryRow(BaseModel):
    """Mean and standard deviation of the error over seeds for one N"""
    N: int
    seeds: int
    error_mean: float
    error_std: float
    error_scale: float


SWEEP_HEADER = list(SweepResultRow.model_fields)
SUMMARY_HEADER = list(SweepSummaryRow.model_fields)
