"""
Run artifacts: experiment config loading, CSV outputs with sidecar metadata, and
policy files.

Every CSV is written next to `<name>.meta.json` holding the config hash, master seed
and artifact version, which is enough to rerun the command bit-for-bit.
"""

import hashlib
import json
from pathlib import Path
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import Any, Dict, List, Optional, Sequence, Type, TypeVar

import numpy as np
import pandas as pd
from pydantic import BaseModel

from mfc_system.config import settings
from mfc_system.core.npg import TrainingTrace
from mfc_system.core.policy import PolicyParams
from mfc_system.exceptions import ArtifactError, ConfigError
from mfc_system.models.schemas import ExperimentConfig
from mfc_system.utils.logger import get_logger

logger = get_logger(__name__)

Row = TypeVar("Row", bound=BaseModel)

TRACE_HEADER = ["j", "value_mean", "value_stderr", "w_norm", "wall_time"]


# -- config ---------------------------------------------------------------------------

def load_config(path: Path | str) -> ExperimentConfig:
    """Parse a TOML experiment file; schema errors surface as pydantic ValidationError"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path} is not valid TOML: {e}") from e
    return ExperimentConfig.model_validate(data)


def config_hash(config: ExperimentConfig) -> str:
    canonical = json.dumps(config.model_dump(mode="json", by_alias=True), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def metadata_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def write_metadata(path: Path, config: Optional[ExperimentConfig], master_seed: int,
                   kind: str, extra: Optional[Dict[str, Any]] = None) -> Path:
    meta = {
        "kind": kind,
        "artifact_version": settings.ARTIFACT_VERSION,
        "master_seed": master_seed,
        "config_hash": config_hash(config) if config is not None else None,
        "config": config.model_dump(mode="json", by_alias=True) if config is not None else None,
    }
    meta.update(extra or {})
    target = metadata_path(path)
    target.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return target


def read_metadata(path: Path | str) -> Dict[str, Any]:
    target = metadata_path(Path(path))
    try:
        return json.loads(target.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ArtifactError(f"cannot read metadata {target}: {e}") from e


# -- CSV rows ---------------------------------------------------------------------------

def _native(value):
    return value.item() if isinstance(value, np.generic) else value


def save_rows(rows: Sequence[BaseModel], header: List[str], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([row.model_dump() for row in rows], columns=header)
    frame.to_csv(path, index=False)
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def load_rows(path: Path | str, model: Type[Row], header: List[str]) -> List[Row]:
    path = Path(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ArtifactError(f"cannot read {path}: {e}") from e
    if list(frame.columns) != header:
        raise ArtifactError(f"{path} has header {list(frame.columns)}, expected {header}")
    return [model(**{k: _native(v) for k, v in record.items()})
            for record in frame.to_dict(orient="records")]


def persist_run(rows: Sequence[BaseModel], header: List[str], path: Path | str,
                config: Optional[ExperimentConfig], master_seed: int, kind: str) -> Path:
    """CSV with a fixed header plus its sidecar metadata record"""
    path = save_rows(rows, header, path)
    write_metadata(path, config, master_seed, kind)
    return path


# -- training traces ---------------------------------------------------------------------

def save_trace(trace: TrainingTrace, path: Path | str, config: Optional[ExperimentConfig],
               master_seed: int) -> Path:
    """Trace CSV plus `<stem>_thetas.csv` with the flattened Phi_j of every iteration"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([vars(r) for r in trace.records()], columns=TRACE_HEADER)
    frame.to_csv(path, index=False)

    snapshots = pd.DataFrame(
        [phi.flat() for phi in trace.policies],
        columns=[f"theta_{i}" for i in range(trace.initial.dim)],
    )
    snapshots.insert(0, "j", range(1, len(trace) + 1))
    snapshots.to_csv(path.with_name(f"{path.stem}_thetas.csv"), index=False)

    write_metadata(path, config, master_seed, "trace",
                   {"theta_shape": list(trace.initial.theta.shape)})
    return path


def load_trace_records(path: Path | str) -> List[Dict[str, float]]:
    path = Path(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ArtifactError(f"cannot read {path}: {e}") from e
    if list(frame.columns) != TRACE_HEADER:
        raise ArtifactError(f"{path} is not a training trace")
    return [{k: _native(v) for k, v in rec.items()} for rec in frame.to_dict(orient="records")]


# -- policies ------------------------------------------------------------------------------

def save_policy(phi: PolicyParams, path: Path | str, config: Optional[ExperimentConfig] = None,
                master_seed: int = 0) -> Path:
    """theta stored row-major; JSON floats round-trip exactly"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "artifact_version": settings.ARTIFACT_VERSION,
        "shape": list(phi.theta.shape),
        "weight_cap": phi.weight_cap,
        "state_count": phi.state_count,
        "encoding_dim": phi.encoding_dim,
        "theta": phi.flat().tolist(),
    }
    path.write_text(json.dumps(payload) + "\n")
    write_metadata(path, config, master_seed, "policy")
    logger.info(f"Saved policy artifact to {path}")
    return path


def load_policy(path: Path | str) -> PolicyParams:
    path = Path(path)
    if not path.is_file():
        raise ArtifactError(f"policy artifact {path} does not exist")
    try:
        payload = json.loads(path.read_text())
        theta = np.asarray(payload["theta"], dtype=np.float64).reshape(payload["shape"])
        return PolicyParams(theta, float(payload["weight_cap"]), int(payload["state_count"]),
                            int(payload["encoding_dim"]))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ArtifactError(f"policy artifact {path} is corrupt: {e}") from e
