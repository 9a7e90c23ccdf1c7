"""Configuration module."""

from . import recipes
from .experiment import (
    RESOLVED_CONFIG_NAME,
    ExperimentConfig,
    load_experiment_config,
    parse_config_text,
    render_config_text,
    write_resolved_config,
)
from .recipes import (
    ATTACK_RECIPES,
    TRAIN_RECIPES,
    AttackRecipe,
    TrainRecipe,
    get_attack_recipe,
    get_train_recipe,
    list_attack_recipes,
    override_recipe,
    recommended_attack_recipe,
)
from .settings import Settings, get_settings

__all__ = [
    "Settings",
    "get_settings",
    "recipes",
    "TrainRecipe",
    "AttackRecipe",
    "TRAIN_RECIPES",
    "ATTACK_RECIPES",
    "get_train_recipe",
    "get_attack_recipe",
    "list_attack_recipes",
    "recommended_attack_recipe",
    "override_recipe",
    "RESOLVED_CONFIG_NAME",
    "ExperimentConfig",
    "load_experiment_config",
    "parse_config_text",
    "render_config_text",
    "write_resolved_config",
]
