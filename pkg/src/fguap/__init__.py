"""
FG-UAP - universal adversarial perturbations by feature gathering.

A self-contained toolkit that trains small victim classifiers on a synthetic
image task, crafts universal perturbations that minimise the cosine
similarity of clean and perturbed last-layer features, and analyses them
(fooling ratio, label dominance, feature collapse, transfer, redundancy).

Simple Python API Examples:
    >>> from fguap import ExperimentRunner, ExperimentConfig
    >>> report = ExperimentRunner().run(ExperimentConfig())
    >>> print(f"FR={report.fooling_ratio:.3f}")

    >>> # Or use the building blocks directly
    >>> from fguap import generate_synthetic, build, train, TrainConfig, craft_uap, AttackConfig
    >>> train_ds, test_ds = generate_synthetic(seed=0)
    >>> model = train(build("convnet", 8, seed=0), train_ds, TrainConfig()).model
    >>> p = craft_uap(model, train_ds, AttackConfig())
"""

from .__version__ import __version__

__author__ = "FG-UAP Toolkit Contributors"
__license__ = "MIT"

from .config.experiment import ExperimentConfig, load_experiment_config
from .config.settings import Settings, get_settings
from .core.attack import AttackConfig, craft_logit_cosine_baseline, craft_uap
from .core.collapse import nc_report
from .core.evaluator import UAPEvaluator, dominance_ratio, fooling_ratio, targeted_fooling_ratio
from .core.perturbation import AttackMode, Perturbation, apply, load_perturbation, save_perturbation
from .core.studies import redundancy_sweep, transfer_matrix
from .core.trainer import TrainConfig, train
from .data.storage import load_dataset, save_dataset
from .data.synthetic import LabeledDataset, generate_synthetic
from .exceptions import FGUAPError
from .models.checkpoint import load_checkpoint, save_checkpoint
from .models.networks import Model, build
from .reports.models import EvalReport
from .runner import ExperimentRunner

__all__ = [
    # Python API
    "ExperimentRunner",
    "ExperimentConfig",
    "load_experiment_config",
    "Settings",
    "get_settings",
    # Data and models
    "LabeledDataset",
    "generate_synthetic",
    "load_dataset",
    "save_dataset",
    "Model",
    "build",
    "load_checkpoint",
    "save_checkpoint",
    "TrainConfig",
    "train",
    # Attack and analysis
    "AttackConfig",
    "AttackMode",
    "Perturbation",
    "apply",
    "craft_uap",
    "craft_logit_cosine_baseline",
    "load_perturbation",
    "save_perturbation",
    "UAPEvaluator",
    "EvalReport",
    "fooling_ratio",
    "targeted_fooling_ratio",
    "dominance_ratio",
    "nc_report",
    "transfer_matrix",
    "redundancy_sweep",
    "FGUAPError",
    # Metadata
    "__version__",
    "__author__",
    "__license__",
]
