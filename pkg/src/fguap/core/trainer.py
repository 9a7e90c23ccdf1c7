"""Cross-entropy training of victim models with Adam."""

import logging
from dataclasses import asdict, dataclass
from typing import Callable, List, Optional

import numpy as np

from ..autodiff import Adam, Tape, Tensor, cross_entropy
from ..data.synthetic import LabeledDataset
from ..exceptions import NonFiniteError, ShapeMismatchError, TrainingDivergedError
from ..models.networks import Model
from ..utils.validators import validate_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters (defaults: convnet recipe)."""

    epochs: int = 60
    batch_size: int = 32
    lr: float = 1e-3
    weight_decay: float = 1e-4
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.lr > 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")
        validate_seed(self.seed)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    train_acc: float
    test_acc: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainResult:
    model: Model
    history: List[EpochRecord]

    @property
    def final_train_accuracy(self) -> Optional[float]:
        return self.history[-1].train_acc if self.history else None

    @property
    def final_test_accuracy(self) -> Optional[float]:
        return self.history[-1].test_acc if self.history else None


def evaluate_accuracy(m: Model, ds: LabeledDataset) -> float:
    """
    Fraction of samples whose prediction equals the label.

    Raises:
        ValueError: If the dataset is empty
        ShapeMismatchError: If image dims differ from the model input
    """
    if len(ds) == 0:
        raise ValueError("Cannot evaluate accuracy on an empty dataset")
    correct = int(np.count_nonzero(m.predict_batch(ds.images) == ds.labels))
    return correct / len(ds)


def _check_compatible(m: Model, ds: LabeledDataset) -> None:
    if ds.num_classes != m.num_classes:
        raise ValueError(f"dataset has {ds.num_classes} classes, model has {m.num_classes}")
    if ds.input_shape != m.input_shape:
        raise ShapeMismatchError("train", ds.input_shape, m.input_shape, "dataset vs model input")


def train(
    m: Model,
    ds: LabeledDataset,
    cfg: TrainConfig,
    test_ds: Optional[LabeledDataset] = None,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
) -> TrainResult:
    """
    Minimise mean cross-entropy of ``m`` on ``ds`` with Adam.

    Batches follow a per-epoch permutation drawn from ``cfg.seed``, so two runs
    with the same model, data and config give bit-identical weights. The
    model is updated in place and returned inside the result.

    Args:
        m: Model to train
        ds: Training data (classes must match the model)
        cfg: Training configuration
        test_ds: Optional held-out split evaluated after each epoch
        on_epoch: Optional callback receiving each epoch record

    Returns:
        TrainResult with the trained model and per-epoch history

    Raises:
        TrainingDivergedError: If the loss or any gradient becomes non-finite
    """
    _check_compatible(m, ds)
    if len(ds) == 0:
        raise ValueError("Cannot train on an empty dataset")
    rng = np.random.default_rng(cfg.seed)
    optimizer = Adam(lr=cfg.lr, weight_decay=cfg.weight_decay)
    m.requires_grad_(True)
    params = m.named_parameters()
    names = list(params)
    history: List[EpochRecord] = []

    logger.info(
        f"Training {m.model_id} on {ds.dataset_id}: epochs={cfg.epochs} "
        f"batch={cfg.batch_size} lr={cfg.lr} wd={cfg.weight_decay}"
    )
    try:
        for epoch in range(1, cfg.epochs + 1):
            order = rng.permutation(len(ds)) if cfg.shuffle else np.arange(len(ds))
            total = 0.0
            for start in range(0, len(ds), cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                x = Tensor(ds.images[idx])
                with Tape() as tape:
                    loss = cross_entropy(m.logits(x), ds.labels[idx])
                grads = tape.gradient(loss, [params[n] for n in names])
                params = optimizer.step(params, zip(names, grads))
                m.load_parameters(params)
                total += loss.item() * len(idx)

            mean_loss = total / len(ds)
            if not np.isfinite(mean_loss):
                raise NonFiniteError("train")
            record = EpochRecord(
                epoch=epoch,
                loss=mean_loss,
                train_acc=evaluate_accuracy(m, ds),
                test_acc=evaluate_accuracy(m, test_ds) if test_ds is not None else None,
            )
            history.append(record)
            logger.info(
                f"epoch {epoch}/{cfg.epochs} loss={record.loss:.4f} train_acc={record.train_acc:.4f}"
                + (f" test_acc={record.test_acc:.4f}" if record.test_acc is not None else "")
            )
            if on_epoch is not None:
                on_epoch(record)
    except NonFiniteError as e:
        m.requires_grad_(False)
        raise TrainingDivergedError(f"training of {m.model_id} diverged: {e}") from e

    m.requires_grad_(False)
    if history:
        m.metadata.update(
            {
                "epochs": str(cfg.epochs),
                "batch_size": str(cfg.batch_size),
                "lr": repr(cfg.lr),
                "weight_decay": repr(cfg.weight_decay),
                "train_seed": str(cfg.seed),
                "train_accuracy": repr(history[-1].train_acc),
            }
        )
        if history[-1].test_acc is not None:
            m.metadata["test_accuracy"] = repr(history[-1].test_acc)
    return TrainResult(model=m, history=history)
