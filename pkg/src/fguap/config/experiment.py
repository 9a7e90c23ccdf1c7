"""Experiment configuration documents.

An experiment config is a UTF-8 text of ``key:value`` lines with dotted
section keys, for example::

    # default pipeline
    data.seed: 0
    data.classes: 8
    train.arch: convnet
    attack.xi: 10/255
    attack.mode: untargeted
    output_dir: runs/default

Lines starting with ``#`` are comments. Unknown keys are a hard error. Keys
left out take the defaults below (training epochs default to the recipe of
the chosen architecture).
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..core.perturbation import AttackMethod, AttackMode
from ..exceptions import ConfigError, MalformedHeaderError
from ..utils.containers import parse_document, render_document, write_text_atomic
from ..utils.validators import VALID_ARCHITECTURES, VALID_SPLITS, parse_budget
from .recipes import ATTACK_RECIPES

logger = logging.getLogger(__name__)

RESOLVED_CONFIG_NAME = "resolved_config.txt"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class DataSection(_Section):
    seed: int = Field(default=0, ge=0, description="Dataset generation seed")
    classes: int = Field(default=8, ge=2, description="Number of classes K")
    per_class_train: int = Field(default=200, ge=1, description="Training images per class")
    per_class_test: int = Field(default=50, ge=1, description="Test images per class")
    side: int = Field(default=24, ge=8, description="Image side length in pixels")


class TrainSection(_Section):
    arch: str = Field(default="convnet", description="Victim architecture tag")
    seed: int = Field(default=0, ge=0, description="Initialisation and shuffling seed")
    epochs: Optional[int] = Field(default=None, ge=0, description="Epochs (default: recipe)")
    batch_size: Optional[int] = Field(default=None, ge=1, description="Batch size (default: recipe)")
    lr: Optional[float] = Field(default=None, gt=0, description="Adam learning rate (default: recipe)")
    weight_decay: Optional[float] = Field(default=None, ge=0, description="L2 weight decay (default: recipe)")

    @field_validator("arch")
    @classmethod
    def check_arch(cls, v: str) -> str:
        if v not in VALID_ARCHITECTURES:
            raise ValueError(f"arch must be one of: {', '.join(VALID_ARCHITECTURES)}")
        return v


class AttackSection(_Section):
    recipe: str = Field(default="default", description="Attack preset name")
    method: AttackMethod = Field(default=AttackMethod.FG, description="Attack objective")
    mode: AttackMode = Field(default=AttackMode.UNTARGETED, description="Untargeted or targeted")
    target_class: Optional[int] = Field(default=None, ge=0, description="Target class (targeted mode)")
    xi: Optional[float] = Field(default=None, ge=0, description="L-inf budget (default: recipe)")
    epochs: Optional[int] = Field(default=None, ge=0, description="Attack epochs (default: recipe)")
    batch_size: Optional[int] = Field(default=None, ge=1, description="Batch size (default: recipe)")
    lr: Optional[float] = Field(default=None, gt=0, description="Adam learning rate (default: recipe)")
    seed: int = Field(default=0, ge=0, description="Shuffling and augmentation seed")
    augment: Optional[bool] = Field(default=None, description="Augment batches (default: recipe)")
    mini_set: Optional[int] = Field(default=None, ge=1, description="Craft on this many images only")

    @field_validator("recipe")
    @classmethod
    def check_recipe(cls, v: str) -> str:
        if v not in ATTACK_RECIPES:
            raise ValueError(f"recipe must be one of: {', '.join(ATTACK_RECIPES)}")
        return v

    @field_validator("xi", mode="before")
    @classmethod
    def parse_xi(cls, v: Any) -> Optional[float]:
        return None if v is None else parse_budget(v)

    @model_validator(mode="after")
    def check_target(self) -> "AttackSection":
        if self.mode is AttackMode.TARGETED and self.target_class is None:
            raise ValueError("targeted mode requires attack.target_class")
        if self.mode is AttackMode.UNTARGETED and self.target_class is not None:
            raise ValueError("attack.target_class is only valid in targeted mode")
        return self


class EvalSection(_Section):
    split: str = Field(default="test", description="Split the perturbation is evaluated on")
    collapse: bool = Field(default=True, description="Include collapse metrics")
    per_class: bool = Field(default=True, description="Include per-class fooling ratios")

    @field_validator("split")
    @classmethod
    def check_split(cls, v: str) -> str:
        if v not in VALID_SPLITS:
            raise ValueError(f"split must be one of: {', '.join(VALID_SPLITS)}")
        return v


class RedundancySection(_Section):
    counts: List[int] = Field(default=[50, 20, 10, 5, 1], description="Per-class counts, descending")

    @field_validator("counts", mode="before")
    @classmethod
    def split_counts(cls, v: Any) -> Any:
        if isinstance(v, str):
            return [int(part) for part in v.split(",") if part.strip()]
        return v

    @field_validator("counts")
    @classmethod
    def check_descending(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("counts cannot be empty")
        if any(c < 1 for c in v):
            raise ValueError("counts must be >= 1")
        if any(a <= b for a, b in zip(v, v[1:])):
            raise ValueError("counts must be strictly descending")
        return v


class ExperimentConfig(_Section):
    """A fully resolved experiment configuration."""

    data: DataSection = Field(default_factory=DataSection)
    train: TrainSection = Field(default_factory=TrainSection)
    attack: AttackSection = Field(default_factory=AttackSection)
    eval: EvalSection = Field(default_factory=EvalSection)
    redundancy: RedundancySection = Field(default_factory=RedundancySection)
    output_dir: Path = Field(default=Path("runs/default"), description="Experiment output directory")

    def flat(self) -> Dict[str, str]:
        """Dotted keys to their text values, in section order; unset optionals are omitted."""
        fields: Dict[str, str] = {}
        for section in ("data", "train", "attack", "eval", "redundancy"):
            for key, value in getattr(self, section).model_dump(mode="json").items():
                if value is None:
                    continue
                if isinstance(value, list):
                    value = ",".join(str(v) for v in value)
                elif isinstance(value, bool):
                    value = str(value).lower()
                elif isinstance(value, float):
                    value = repr(value)
                fields[f"{section}.{key}"] = str(value)
        fields["output_dir"] = self.output_dir.as_posix()
        return fields


def _nest(fields: Dict[str, str]) -> Dict[str, Any]:
    nested: Dict[str, Any] = {}
    for key, value in fields.items():
        key = key.strip()
        value = value.strip()
        if key == "output_dir":
            nested[key] = value
            continue
        section, dot, name = key.partition(".")
        if not dot or not name or section not in ExperimentConfig.model_fields or section == "output_dir":
            raise ConfigError(f"Unknown config key '{key}'")
        nested.setdefault(section, {})[name] = value
    return nested


def parse_config_text(text: str) -> ExperimentConfig:
    """
    Parse an experiment config document.

    Raises:
        ConfigError: On malformed lines, unknown keys or invalid values
    """
    body = "\n".join(line for line in text.splitlines() if not line.lstrip().startswith("#"))
    try:
        fields = parse_document(body)
    except MalformedHeaderError as e:
        raise ConfigError(str(e)) from None
    nested = _nest(fields)
    try:
        return ExperimentConfig.model_validate(nested)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"Invalid experiment config: {problems}") from None


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """Load and validate a config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError:
        raise ConfigError(f"{path}: config is not valid UTF-8") from None
    cfg = parse_config_text(text)
    logger.info(f"Loaded experiment config from {path}")
    return cfg


def render_config_text(cfg: ExperimentConfig) -> str:
    return render_document(cfg.flat()) + "\n"


def write_resolved_config(cfg: ExperimentConfig, directory: Union[str, Path]) -> Path:
    """Write ``resolved_config.txt`` into ``directory``."""
    return write_text_atomic(Path(directory) / RESOLVED_CONFIG_NAME, render_config_text(cfg))
