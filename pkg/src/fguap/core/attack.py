"""Universal perturbation crafting by feature gathering.

The attack minimises the cosine similarity between the last-layer features of
clean and perturbed images (``fg_loss``), or, in targeted mode, that
similarity minus the target logit. Each batch contributes one Adam step on
the batch-mean loss, after which delta is clamped to [-xi, xi]. The loss is
computed on the unclipped ``x + delta``; pixel clipping happens in ``apply``.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np

from ..autodiff import (
    AdamState,
    Tape,
    Tensor,
    adam_step,
    broadcast_batch,
    cosine_similarity,
    getitem,
    tensor_mean,
)
from ..data.augment import augment_batch
from ..data.synthetic import LabeledDataset
from ..exceptions import (
    AttackDivergedError,
    BudgetViolationError,
    NonFiniteError,
    ShapeMismatchError,
)
from ..models.networks import Model
from ..utils.validators import validate_class_index, validate_seed
from .perturbation import (
    DEFAULT_XI,
    AttackMethod,
    AttackMode,
    Perturbation,
    random_perturbation,
)

logger = logging.getLogger(__name__)

StepCallback = Callable[[int, int, np.ndarray, float], None]


@dataclass(frozen=True)
class AttackConfig:
    """Attack hyperparameters: batch size, epochs, Adam lr and L-inf budget."""

    batch_size: int = 32
    epochs: int = 10
    lr: float = 0.02
    xi: float = DEFAULT_XI
    mode: AttackMode = AttackMode.UNTARGETED
    target_class: Optional[int] = None
    seed: int = 0
    augment: bool = False
    method: AttackMethod = AttackMethod.FG

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if not self.lr > 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if not (np.isfinite(self.xi) and self.xi >= 0):
            raise ValueError(f"xi must be a finite value >= 0, got {self.xi}")
        validate_seed(self.seed)
        object.__setattr__(self, "mode", AttackMode(self.mode))
        object.__setattr__(self, "method", AttackMethod(self.method))
        if self.mode is AttackMode.TARGETED and self.target_class is None:
            raise ValueError("targeted mode requires target_class")
        if self.mode is AttackMode.UNTARGETED and self.target_class is not None:
            raise ValueError("target_class is only valid in targeted mode")


@dataclass
class AttackResult:
    perturbation: Perturbation
    epoch_losses: List[float] = field(default_factory=list)


def fg_loss(h: Tensor, h_adv: Tensor) -> Tensor:
    """Cosine similarity of clean and adversarial features; batch mean for [N, d]."""
    cos = cosine_similarity(h, h_adv)
    return tensor_mean(cos) if cos.ndim else cos


def targeted_fg_loss(h: Tensor, h_adv: Tensor, logits_adv: Tensor, target: int) -> Tensor:
    """
    ``fg_loss(h, h_adv)`` minus the adversarial logit of ``target``.

    For batched inputs the target logit is averaged over the batch.

    Raises:
        ValueError: If target is outside [0, K)
    """
    validate_class_index(target, logits_adv.dims[-1])
    similarity = fg_loss(h, h_adv)
    if logits_adv.ndim == 1:
        return similarity - getitem(logits_adv, target)
    return similarity - tensor_mean(getitem(logits_adv, (slice(None), target)))


def attack_objective(m: Model, images: np.ndarray, delta: Tensor, cfg: AttackConfig) -> Tensor:
    """
    Batch-mean attack loss at ``delta`` for clean ``images`` [N, C, H, W].

    Clean logits and features are treated as constants.
    """
    x = Tensor(images)
    clean_logits, clean_feats = m.forward_with_features(x)
    clean_logits, clean_feats = clean_logits.detach(), clean_feats.detach()

    x_adv = x + broadcast_batch(delta, len(images))
    logits_adv, feats_adv = m.forward_with_features(x_adv)
    if cfg.method is AttackMethod.LOGIT_COSINE:
        clean_repr, adv_repr = clean_logits, logits_adv
    else:
        clean_repr, adv_repr = clean_feats, feats_adv

    if cfg.mode is AttackMode.TARGETED:
        return targeted_fg_loss(clean_repr, adv_repr, logits_adv, cfg.target_class)
    return fg_loss(clean_repr, adv_repr)


def _project(values: np.ndarray, xi: float) -> np.ndarray:
    # "+ 0.0" turns -0.0 into 0.0
    return np.clip(values, -xi, xi) + 0.0


def run_attack(
    m: Model,
    ds: LabeledDataset,
    cfg: AttackConfig,
    on_step: Optional[StepCallback] = None,
    debug_invariants: bool = False,
) -> AttackResult:
    """
    Craft a universal perturbation for surrogate ``m`` on ``ds``.

    delta starts at zero. Each epoch visits ``ds`` in a permutation drawn
    from ``cfg.seed``; Adam state persists across epochs.

    Args:
        m: Surrogate model
        ds: Images to craft on (labels are not used)
        cfg: Attack configuration; ``cfg.method`` selects fg, logit-cosine or random
        on_step: Optional callback (epoch, step, delta, batch loss) after each update
        debug_invariants: Re-check ``max|delta| <= xi`` after every step

    Returns:
        AttackResult with the perturbation and the per-epoch mean loss

    Raises:
        ShapeMismatchError: If dataset images do not fit the model
        AttackDivergedError: If the loss or gradient becomes non-finite
    """
    if ds.input_shape != m.input_shape:
        raise ShapeMismatchError("attack", ds.input_shape, m.input_shape, "dataset vs model input")
    if len(ds) == 0:
        raise ValueError("Cannot craft a perturbation on an empty dataset")
    if cfg.mode is AttackMode.TARGETED:
        validate_class_index(cfg.target_class, m.num_classes)

    if cfg.method is AttackMethod.RANDOM:
        p = random_perturbation(m.input_shape, cfg.xi, cfg.seed, surrogate_id=m.model_id)
        return AttackResult(p, [])

    delta = Tensor(np.zeros(m.input_shape), requires_grad=True)
    state = AdamState.zeros_like(delta)
    rng = np.random.default_rng(cfg.seed)
    epoch_losses: List[float] = []
    logger.info(
        f"Crafting {cfg.method.value}/{cfg.mode.value} UAP on {m.model_id}: "
        f"b={cfg.batch_size} m={cfg.epochs} lr={cfg.lr} xi={cfg.xi:.5f} augment={cfg.augment}"
    )

    try:
        for epoch in range(cfg.epochs):
            order = rng.permutation(len(ds))
            total = 0.0
            for step, start in enumerate(range(0, len(ds), cfg.batch_size)):
                idx = order[start : start + cfg.batch_size]
                images = ds.images[idx]
                if cfg.augment:
                    images = augment_batch(images, cfg.seed, epoch, idx)
                with Tape() as tape:
                    loss = attack_objective(m, images, delta, cfg)
                (grad,) = tape.gradient(loss, [delta])
                updated = adam_step(delta, grad, state, cfg.lr)
                delta = Tensor(_project(updated.data, cfg.xi), requires_grad=True)
                if debug_invariants and float(np.max(np.abs(delta.data))) > cfg.xi:
                    raise BudgetViolationError(f"max |delta| exceeds xi={cfg.xi} at epoch {epoch} step {step}")
                batch_loss = loss.item()
                total += batch_loss * len(idx)
                logger.debug(f"epoch {epoch} step {step} loss={batch_loss:.6f}")
                if on_step is not None:
                    on_step(epoch, step, delta.numpy(), batch_loss)
            epoch_losses.append(total / len(ds))
            logger.info(f"attack epoch {epoch + 1}/{cfg.epochs} mean loss={epoch_losses[-1]:.6f}")
    except NonFiniteError as e:
        raise AttackDivergedError(f"attack on {m.model_id} diverged: {e}") from e

    p = Perturbation(
        delta.numpy(),
        cfg.xi,
        mode=cfg.mode,
        target_class=cfg.target_class,
        surrogate_id=m.model_id,
        seed=cfg.seed,
        method=cfg.method,
    )
    return AttackResult(p, epoch_losses)


def craft_uap(m: Model, ds: LabeledDataset, cfg: AttackConfig, **kwargs) -> Perturbation:
    """Feature-gathering UAP (untargeted or targeted per ``cfg.mode``)."""
    return run_attack(m, ds, replace(cfg, method=AttackMethod.FG), **kwargs).perturbation


def craft_logit_cosine_baseline(m: Model, ds: LabeledDataset, cfg: AttackConfig, **kwargs) -> Perturbation:
    """Same loop as ``craft_uap`` with cosine similarity taken between logit vectors."""
    return run_attack(m, ds, replace(cfg, method=AttackMethod.LOGIT_COSINE), **kwargs).perturbation
