"""
Run configuration: YAML file + dotted `--set` overrides, strictly validated
"""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.evaluation import CoverageThresholds
from src.losses import LossSpec
from src.models import ModelPair, build_model_pair
from src.training import TrainConfig
from src.utils.exceptions import ConfigError
from src.utils.helpers import config_hash, load_yaml


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelSection(_Section):
    family: Literal["time-series", "rastrigin"] = "time-series"
    n_dim: int = Field(20, ge=1)
    noise_variance: float = Field(0.0625, gt=0.0)
    t: Optional[List[float]] = None
    columns: Optional[List[int]] = None
    n_per_model: int = Field(100_000, ge=1)

    @model_validator(mode="after")
    def _check_family(self) -> "ModelSection":
        if self.family == "time-series" and self.n_dim < 2:
            raise ValueError("time-series models need n_dim >= 2")
        if self.t is not None and len(self.t) != self.n_dim:
            raise ValueError(f"t override has {len(self.t)} points, expected n_dim={self.n_dim}")
        if self.columns is not None and any(c < 0 or c >= self.n_dim for c in self.columns):
            raise ValueError(f"columns must lie in [0, {self.n_dim})")
        return self

    def pair(self) -> ModelPair:
        return build_model_pair(self.family, self.n_dim, self.noise_variance, self.t)


class LossSection(_Section):
    kind: str = "lpop_exponential"
    alpha: float = 2.0

    @model_validator(mode="after")
    def _check_spec(self) -> "LossSection":
        self.spec()
        return self

    def spec(self) -> LossSpec:
        return LossSpec(kind=self.kind, alpha=self.alpha)


class TrainSection(_Section):
    ensemble_size: int = Field(4, ge=1)
    batch_size: int = Field(128, ge=2)
    max_epochs: int = Field(200, ge=1)
    patience: int = Field(10, ge=1)
    validation_fraction: float = Field(0.1, gt=0.0, lt=1.0)
    learning_rate: float = Field(1e-4, gt=0.0)
    decay_rate: float = Field(0.95, gt=0.0, le=1.0)
    augment_sign_flip: bool = True
    standardize_inputs: bool = True
    allow_imbalance: bool = False

    def to_train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(**self.model_dump(exclude={"ensemble_size"}), seed=seed)


def _default_comparison() -> List[LossSection]:
    return [LossSection(kind="cross_entropy"), LossSection(kind="lpop_exponential", alpha=2.0)]


class EvalSection(_Section):
    n_per_model: int = Field(50_000, ge=1)
    n_bins: int = Field(10, ge=2)
    min_count: int = Field(20, ge=1)
    max_abs_mean: float = Field(0.1, ge=0.0)
    min_std: float = Field(0.8, ge=0.0)
    max_std: float = Field(1.2, gt=0.0)
    grid_points: int = Field(41, ge=2)
    grid_limit: float = Field(2.0, gt=0.0)
    high_threshold: float = Field(5.0, ge=0.0)
    histogram_bins: int = Field(40, ge=1)
    reference_checkpoints: Optional[str] = None
    compare_losses: List[LossSection] = Field(default_factory=_default_comparison)

    def thresholds(self) -> CoverageThresholds:
        return CoverageThresholds(self.max_abs_mean, self.min_std, self.max_std)


class IOSection(_Section):
    out_dir: str = "runs/default"
    dataset: Optional[str] = None
    eval_dataset: Optional[str] = None
    checkpoints: Optional[str] = None

    @property
    def out(self) -> Path:
        return Path(self.out_dir)

    def dataset_path(self) -> Path:
        return Path(self.dataset) if self.dataset else self.out / "dataset.evds"

    def eval_dataset_path(self) -> Path:
        return Path(self.eval_dataset) if self.eval_dataset else self.out / "eval_dataset.evds"

    def checkpoint_dir(self) -> Path:
        return Path(self.checkpoints) if self.checkpoints else self.out / "ensemble"


class RunConfig(_Section):
    seed: int = Field(42, ge=0)
    model: ModelSection = Field(default_factory=ModelSection)
    loss: LossSection = Field(default_factory=LossSection)
    train: TrainSection = Field(default_factory=TrainSection)
    eval: EvalSection = Field(default_factory=EvalSection)
    io: IOSection = Field(default_factory=IOSection)

    def train_config(self) -> TrainConfig:
        return self.train.to_train_config(self.seed)

    def resolved(self) -> Dict[str, Any]:
        """Plain-data form, as written to resolved_config.yaml"""
        return self.model_dump(mode="json")

    @property
    def hash(self) -> str:
        return config_hash(self.resolved())


def _set_dotted(data: Dict[str, Any], key: str, value: Any) -> None:
    parts = key.split(".")
    if not all(parts):
        raise ConfigError("malformed key", key=key)
    node = data
    for i, part in enumerate(parts[:-1]):
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError("is not a section", key=".".join(parts[: i + 1]))
        node = child
    node[parts[-1]] = value


def parse_override(text: str):
    """'train.batch_size=64' -> ('train.batch_size', 64); values are parsed as YAML scalars"""
    key, sep, raw = text.partition("=")
    if not sep:
        raise ConfigError(f"override '{text}' is not of the form key=value")
    return key.strip(), yaml.safe_load(raw)


def _config_error(exc: ValidationError) -> ConfigError:
    error = exc.errors()[0]
    key = ".".join(str(part) for part in error["loc"])
    message = "unknown key" if error["type"] == "extra_forbidden" else error["msg"]
    return ConfigError(message, key=key or None)


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Sequence[str] = (),
    seed: Optional[int] = None,
    out_dir: Optional[str] = None,
) -> RunConfig:
    """
    Build a validated RunConfig

    Precedence: built-in defaults < config file < --set overrides < --seed/--out.

    Args:
        path: YAML config file (None for defaults only)
        overrides: 'dotted.key=value' strings
        seed: Global seed override
        out_dir: Output directory override

    Returns:
        RunConfig

    Raises:
        ConfigError: unknown key or invalid value; the message names the dotted key
    """
    raw: Dict[str, Any] = {}
    if path is not None:
        if not Path(path).exists():
            raise FileNotFoundError(f"config file not found: {path}")
        try:
            raw = load_yaml(path)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path} must contain a mapping at the top level")
    for text in overrides:
        _set_dotted(raw, *parse_override(text))
    if seed is not None:
        raw["seed"] = seed
    if out_dir is not None:
        _set_dotted(raw, "io.out_dir", out_dir)
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise _config_error(exc) from exc
