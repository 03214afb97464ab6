from pathlib import Path

import psutil
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


def _physical_cores() -> int:
    return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1


class Settings(BaseSettings):
    """Application settings with environment variable support"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    # Project
    PROJECT_NAME: str = "Shared-State Mean-Field Control"
    VERSION: str = "1.0.0"
    ARTIFACT_VERSION: int = 1
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Paths
    BASE_DIR: Path = Path(__file__).resolve().parent.parent.parent
    DATA_DIR: Path = BASE_DIR / "data"
    LOGS_DIR: Path = DATA_DIR / "logs"
    RUNS_DIR: Path = DATA_DIR / "runs"

    # Performance
    WORKER_COUNT: int = Field(default_factory=_physical_cores)

    # Numerics
    ENUMERATION_CAP: int = 1_000_000
    PRUNE_PROBABILITY: float = 1e-15
    SIMPLEX_TOL: float = 1e-9
    DEFAULT_WEIGHT_CAP: float = 10.0
    TAIL_FRACTION: float = 1e-3

    @field_validator("WORKER_COUNT", "ENUMERATION_CAP")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @field_validator("SIMPLEX_TOL", "PRUNE_PROBABILITY", "TAIL_FRACTION")
    @classmethod
    def validate_small(cls, v: float) -> float:
        if not 0.0 <= v < 1.0:
            raise ValueError("must lie in [0, 1)")
        return v


settings = Settings()
