"""Report models serialised as JSON next to experiment outputs."""

from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ClassFooling(BaseModel):
    """Fooling ratio restricted to samples of one ground-truth class."""

    class_index: int = Field(..., ge=0, description="Ground-truth class")
    count: int = Field(..., ge=0, description="Samples of this class")
    fooling_ratio: float = Field(..., ge=0.0, le=1.0, description="Fraction whose prediction changed")


class EvalReport(BaseModel):
    """Evaluation of one perturbation against one victim model on one split."""

    model_config = ConfigDict(extra="forbid", protected_namespaces=())

    model_id: str = Field(..., description="Victim model identifier")
    perturbation_id: str = Field(..., description="Perturbation identifier")
    dataset_id: str = Field(..., description="Evaluated split identifier")
    surrogate_id: str = Field(default="", description="Model the perturbation was crafted on")
    method: str = Field(..., description="fg, logit-cosine or random")
    mode: str = Field(..., description="untargeted or targeted")
    target_class: Optional[int] = Field(default=None, ge=0, description="Target class of a targeted UAP")
    xi: float = Field(..., ge=0.0, description="L-infinity budget in pixel units")
    linf: float = Field(..., ge=0.0, description="Observed max |delta|")
    num_samples: int = Field(..., ge=1, description="Evaluated samples")

    clean_accuracy: float = Field(..., ge=0.0, le=1.0, description="Victim accuracy on clean inputs")
    fooling_ratio: float = Field(..., ge=0.0, le=1.0, description="Fraction of changed predictions")
    targeted_fooling_ratio: Optional[float] = Field(
        default=None, ge=0.0, le=1.0, description="Fraction predicted as the target (targeted only)"
    )
    clean_target_fraction: Optional[float] = Field(
        default=None, ge=0.0, le=1.0, description="Fraction of clean inputs already predicted as the target"
    )

    dominance_1: float = Field(..., ge=0.0, le=1.0, description="Share of the most frequent perturbed class")
    dominance_3: float = Field(..., ge=0.0, le=1.0, description="Share of the 3 most frequent perturbed classes")
    dominance_5: float = Field(..., ge=0.0, le=1.0, description="Share of the 5 most frequent perturbed classes")
    dominant_class: int = Field(..., ge=0, description="Most frequent perturbed prediction")
    uap_class: int = Field(..., ge=0, description="Prediction on the perturbation over a mid-gray canvas")
    uap_class_rank: int = Field(..., ge=1, description="Frequency rank of uap_class among perturbed predictions")

    nc_metric_clean: Optional[float] = Field(default=None, description="Collapse metric, clean features")
    nc_metric_perturbed: Optional[float] = Field(default=None, description="Collapse metric, perturbed features")
    feature_gathering_clean: Optional[float] = Field(
        default=None, description="Mean cosine of clean features to the perturbation's own feature"
    )
    feature_gathering_perturbed: Optional[float] = Field(
        default=None, description="Mean cosine of perturbed features to the perturbation's own feature"
    )
    per_class: List[ClassFooling] = Field(default_factory=list, description="Per-class fooling ratios")

    @model_validator(mode="after")
    def check_dominance_order(self) -> "EvalReport":
        """Top-k shares are monotone in k."""
        if not (self.dominance_1 <= self.dominance_3 <= self.dominance_5):
            raise ValueError(
                f"dominance ratios must satisfy D1 <= D3 <= D5, got "
                f"{self.dominance_1}, {self.dominance_3}, {self.dominance_5}"
            )
        if self.mode == "targeted" and self.target_class is None:
            raise ValueError("targeted reports need target_class")
        return self


class AttackLog(BaseModel):
    """Record of one attack run."""

    perturbation_id: str
    surrogate_id: str
    method: str
    mode: str
    target_class: Optional[int] = None
    batch_size: int = Field(..., ge=1)
    epochs: int = Field(..., ge=0)
    lr: float = Field(..., gt=0.0)
    xi: float = Field(..., ge=0.0)
    seed: int = Field(..., ge=0)
    augment: bool = False
    num_samples: int = Field(..., ge=1, description="Images the perturbation was crafted on")
    epoch_losses: List[float] = Field(default_factory=list, description="Mean loss per epoch")
    linf: float = Field(..., ge=0.0)


class DatasetManifest(BaseModel):
    """Generation manifest written by gen-data."""

    seed: int = Field(..., ge=0)
    num_classes: int = Field(..., ge=2)
    per_class_train: int = Field(..., ge=1)
    per_class_test: int = Field(..., ge=1)
    side: int = Field(..., ge=8)
    files: Dict[str, str] = Field(default_factory=dict, description="split -> file name")
    num_samples: Dict[str, int] = Field(default_factory=dict, description="split -> sample count")


class TrainSummary(BaseModel):
    """Final accuracies printed and recorded by train."""

    model_config = ConfigDict(protected_namespaces=())

    model_id: str
    arch: str
    epochs: int = Field(..., ge=0)
    train_accuracy: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    test_accuracy: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    checkpoint: str
    history: str
