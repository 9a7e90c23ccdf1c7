"""Training and attack presets.

Training recipes are keyed by architecture tag and attack recipes by study
name. All values are data; the trainer and attack take them through
``to_train_config`` / ``to_attack_config`` with optional overrides.

Attack presets:
- default: batch 32, 10 epochs, lr 0.02, xi 10/255
- attention: 20 epochs at lr 0.01 for the patch-attention victim
- redundancy: 20 epochs at lr 0.01 for per-class subset sweeps
- mini-set: default hyperparameters with augmentation on
"""

import dataclasses
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from ..core.attack import AttackConfig
from ..core.perturbation import DEFAULT_XI
from ..core.trainer import TrainConfig


@dataclass(frozen=True)
class TrainRecipe:
    """Training hyperparameters for one architecture."""

    arch: str
    epochs: int
    batch_size: int = 32
    lr: float = 1e-3
    weight_decay: float = 1e-4

    def to_train_config(self, seed: int = 0, **overrides: Any) -> TrainConfig:
        values = {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "weight_decay": self.weight_decay,
            "seed": seed,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return TrainConfig(**values)


@dataclass(frozen=True)
class AttackRecipe:
    """Attack hyperparameters for one study."""

    name: str
    batch_size: int = 32
    epochs: int = 10
    lr: float = 0.02
    xi: float = DEFAULT_XI
    augment: bool = False
    description: str = ""

    def to_attack_config(self, seed: int = 0, **overrides: Any) -> AttackConfig:
        values = {
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "lr": self.lr,
            "xi": self.xi,
            "augment": self.augment,
            "seed": seed,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return AttackConfig(**values)


TRAIN_RECIPES: Dict[str, TrainRecipe] = {
    "convnet": TrainRecipe(arch="convnet", epochs=60),
    "mlp": TrainRecipe(arch="mlp", epochs=80),
    "attnnet": TrainRecipe(arch="attnnet", epochs=120),
}

ATTACK_RECIPES: Dict[str, AttackRecipe] = {
    "default": AttackRecipe(
        name="default",
        description="Standard feature-gathering attack",
    ),
    "attention": AttackRecipe(
        name="attention",
        epochs=20,
        lr=0.01,
        description="Longer, gentler schedule for the attention victim",
    ),
    "redundancy": AttackRecipe(
        name="redundancy",
        epochs=20,
        lr=0.01,
        description="Per-class subset sweeps",
    ),
    "mini-set": AttackRecipe(
        name="mini-set",
        augment=True,
        description="Few-image attack with rotation/flip augmentation",
    ),
}


def get_train_recipe(arch: str) -> TrainRecipe:
    """Get the training recipe for an architecture.

    Raises:
        ValueError: If no recipe exists for ``arch``
    """
    if arch not in TRAIN_RECIPES:
        available = ", ".join(TRAIN_RECIPES.keys())
        raise ValueError(f"No training recipe for '{arch}'. Available: {available}")
    return TRAIN_RECIPES[arch]


def get_attack_recipe(name: str) -> AttackRecipe:
    """Get an attack preset by name.

    Raises:
        ValueError: If the preset is unknown
    """
    if name not in ATTACK_RECIPES:
        available = ", ".join(ATTACK_RECIPES.keys())
        raise ValueError(f"Unknown attack recipe '{name}'. Available: {available}")
    return ATTACK_RECIPES[name]


def list_attack_recipes() -> List[str]:
    return list(ATTACK_RECIPES.keys())


def recommended_attack_recipe(arch: str) -> AttackRecipe:
    """The attention victim gets its own preset; everything else uses ``default``."""
    return ATTACK_RECIPES["attention" if arch == "attnnet" else "default"]


def override_recipe(recipe: TrainRecipe, overrides: Optional[Dict[str, Any]] = None) -> TrainRecipe:
    """Copy ``recipe`` with the known, non-None fields of ``overrides`` replaced."""
    if not overrides:
        return recipe
    valid = {k: v for k, v in overrides.items() if v is not None and hasattr(recipe, k)}
    return dataclasses.replace(recipe, **valid)
