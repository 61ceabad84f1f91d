"""
Run configuration and the flat "key = value" config file format
File: src/trainers/config.py
"""
from pathlib import Path
from typing import Dict, Literal, Optional, Tuple

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.envs.registry import ENVIRONMENTS, make_env
from src.utils.errors import ConfigurationError
from src.utils.settings import settings

SSM_SEGMENT_LENGTH = 10


class RunConfig(BaseModel):
    """Everything that determines a run's outputs, together with the seed"""

    model_config = ConfigDict(extra="forbid")

    env: str = "PointMass2D"
    pathway: Literal["obs", "ssm"] = "obs"

    # Consistency
    alpha: float = Field(0.5, ge=0.0)  # scale of the consistency loss
    k: int = Field(20, ge=1)  # open-loop unroll length
    encoder_mode: Literal["trained", "frozen"] = "trained"
    open_loop_policy_actions: bool = False

    # Episodes / segments
    horizon: Optional[int] = Field(None, ge=1)  # env horizon (obs) or segment length T (ssm)
    gamma: float = 0.99
    seed: int = Field(0, ge=0)
    updates: int = Field(500, ge=1)
    batch_size: int = Field(8, ge=1)  # episodes (obs) or segments (ssm) per update

    # Optimization
    lr_policy: float = Field(3e-4, gt=0.0)
    lr_model: float = Field(1e-3, gt=0.0)
    lr_encoder: float = Field(1e-3, gt=0.0)
    entropy_coef: float = Field(0.01, ge=0.0)
    value_coef: float = Field(0.5, ge=0.0)
    use_model: bool = True  # false: model-free A2C only

    # State-space pathway data
    dataset_path: Optional[str] = None
    dataset_episodes: int = Field(200, ge=1)
    heldout_episodes: int = Field(20, ge=0)

    # Outputs
    eval_every: int = Field(10, ge=1)
    output_dir: str = Field(default_factory=lambda: str(Path(settings.runs_root) / "default"))
    smoothing_window: int = Field(100, ge=1)
    log_wallclock: bool = False

    @field_validator("env")
    @classmethod
    def _known_env(cls, value: str) -> str:
        if value not in ENVIRONMENTS:
            raise ValueError(f"unknown environment {value!r}; expected one of {sorted(ENVIRONMENTS)}")
        return value

    @field_validator("gamma")
    @classmethod
    def _discount_range(cls, value: float) -> float:
        if not 0.0 <= value < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {value}")
        return value

    @model_validator(mode="after")
    def _fill_defaults(self) -> "RunConfig":
        if self.horizon is None:
            horizon = SSM_SEGMENT_LENGTH if self.pathway == "ssm" else make_env(self.env).spec.horizon
            self.horizon = horizon
        if self.dataset_path is None:
            self.dataset_path = self.default_dataset_path()
        if self.pathway == "ssm" and make_env(self.env).spec.is_discrete:
            raise ValueError(f"the state-space pathway needs a continuous environment, got {self.env}")
        return self

    def default_dataset_path(self) -> str:
        return str(Path(self.output_dir) / f"expert_{self.env}.bin")

    def with_overrides(self, **overrides) -> "RunConfig":
        """Re-validated copy; derived defaults are recomputed unless overridden"""
        data = self.model_dump()
        if "dataset_path" not in overrides and self.dataset_path == self.default_dataset_path():
            data["dataset_path"] = None
        if "horizon" not in overrides and ("pathway" in overrides or "env" in overrides):
            data["horizon"] = None
        data.update(overrides)
        try:
            return RunConfig.model_validate(data)
        except ValidationError as e:
            raise _as_configuration_error(e, {}) from e

    def to_text(self) -> str:
        """Canonical config file text (every field, declaration order)"""
        lines = []
        for key, value in self.model_dump().items():
            if isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def _as_configuration_error(error: ValidationError, lines: Dict[str, int]) -> ConfigurationError:
    first = error.errors()[0]
    key = str(first["loc"][0]) if first["loc"] else None
    return ConfigurationError(first["msg"], key=key, line=lines.get(key))


def parse_config_lines(text: str) -> Tuple[Dict[str, str], Dict[str, int]]:
    """Raw key/value strings and the 1-based line each key came from"""
    values: Dict[str, str] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"expected 'key = value', got {raw.strip()!r}", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError("missing key before '='", line=number)
        if key not in RunConfig.model_fields:
            raise ConfigurationError("unknown config key", key=key, line=number)
        if key in values:
            raise ConfigurationError(f"duplicate key (first set on line {lines[key]})",
                                     key=key, line=number)
        values[key] = value
        lines[key] = number
    return values, lines


def parse_config(text: str) -> RunConfig:
    values, lines = parse_config_lines(text)
    data = {key: (None if value.lower() == "none" else value) for key, value in values.items()}
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise _as_configuration_error(e, lines) from e


def load_config(path: str) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ConfigurationError(f"{path} is not UTF-8 text: {e}")
    config = parse_config(text)
    logger.info(f"Config loaded from {path}: env={config.env} pathway={config.pathway} "
                f"alpha={config.alpha} k={config.k}")
    return config
