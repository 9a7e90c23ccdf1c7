"""Training, attacks, and analysis."""

from .attack import (
    AttackConfig,
    AttackResult,
    attack_objective,
    craft_logit_cosine_baseline,
    craft_uap,
    fg_loss,
    run_attack,
    targeted_fg_loss,
)
from .collapse import CovarianceStats, NCReport, covariance_stats, nc_metric, nc_report, pseudo_inverse
from .evaluator import (
    UAPEvaluator,
    dominance_rank,
    dominance_ratio,
    dominant_class_check,
    feature_gathering,
    fooling_ratio,
    per_class_fooling,
    targeted_fooling_ratio,
)
from .perturbation import (
    AttackMethod,
    AttackMode,
    Perturbation,
    apply,
    load_perturbation,
    random_perturbation,
    save_perturbation,
    zero_perturbation,
)
from .studies import RedundancyRow, RedundancySweep, TransferMatrix, redundancy_sweep, transfer_matrix
from .trainer import EpochRecord, TrainConfig, TrainResult, evaluate_accuracy, train

__all__ = [
    "AttackConfig",
    "AttackResult",
    "AttackMethod",
    "AttackMode",
    "Perturbation",
    "apply",
    "attack_objective",
    "craft_uap",
    "craft_logit_cosine_baseline",
    "fg_loss",
    "targeted_fg_loss",
    "run_attack",
    "random_perturbation",
    "zero_perturbation",
    "save_perturbation",
    "load_perturbation",
    "CovarianceStats",
    "NCReport",
    "covariance_stats",
    "nc_metric",
    "nc_report",
    "pseudo_inverse",
    "UAPEvaluator",
    "fooling_ratio",
    "targeted_fooling_ratio",
    "dominance_ratio",
    "dominance_rank",
    "dominant_class_check",
    "feature_gathering",
    "per_class_fooling",
    "TransferMatrix",
    "RedundancyRow",
    "RedundancySweep",
    "transfer_matrix",
    "redundancy_sweep",
    "TrainConfig",
    "TrainResult",
    "EpochRecord",
    "train",
    "evaluate_accuracy",
]
