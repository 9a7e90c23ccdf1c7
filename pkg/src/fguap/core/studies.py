"""Cross-model transfer and per-class redundancy studies."""

import logging
from dataclasses import dataclass, replace
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..data.synthetic import LabeledDataset, subsample_per_class
from ..models.networks import Model
from .attack import AttackConfig, craft_uap
from .evaluator import fooling_ratio
from .perturbation import Perturbation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransferMatrix:
    """Fooling ratios with rows = surrogate perturbations, columns = victim models."""

    surrogates: Tuple[str, ...]
    victims: Tuple[str, ...]
    values: np.ndarray

    def rows(self) -> Iterator[Tuple[str, str, float]]:
        for i, surrogate in enumerate(self.surrogates):
            for j, victim in enumerate(self.victims):
                yield surrogate, victim, float(self.values[i, j])

    def white_box_is_row_max(self) -> List[Optional[bool]]:
        """Per row: whether the entry whose victim is the surrogate is the row maximum."""
        flags: List[Optional[bool]] = []
        for i, surrogate in enumerate(self.surrogates):
            if surrogate in self.victims:
                j = self.victims.index(surrogate)
                flags.append(bool(self.values[i, j] >= self.values[i].max()))
            else:
                flags.append(None)
        return flags


def transfer_matrix(
    models: Sequence[Model],
    perturbations: Sequence[Perturbation],
    ds: LabeledDataset,
) -> TransferMatrix:
    """
    Entry (i, j) is ``fooling_ratio(models[j], ds, perturbations[i])``.

    Raises:
        ValueError: If either list is empty
        ShapeMismatchError: If a perturbation does not fit a model's input
    """
    if not models or not perturbations:
        raise ValueError("transfer_matrix needs at least one model and one perturbation")
    values = np.zeros((len(perturbations), len(models)))
    for i, p in enumerate(perturbations):
        for j, m in enumerate(models):
            values[i, j] = fooling_ratio(m, ds, p)
            logger.debug(f"transfer {p.perturbation_id} -> {m.model_id}: {values[i, j]:.4f}")
    surrogates = tuple(p.surrogate_id or p.perturbation_id for p in perturbations)
    return TransferMatrix(surrogates, tuple(m.model_id for m in models), values)


@dataclass(frozen=True)
class RedundancyRow:
    count: int
    fr: float
    ratio_to_full: Optional[float]


@dataclass(frozen=True)
class RedundancySweep:
    full_fr: float
    rows: Tuple[RedundancyRow, ...]


def redundancy_sweep(
    m: Model,
    ds: LabeledDataset,
    per_class_counts: Sequence[int],
    cfg: AttackConfig,
    eval_ds: Optional[LabeledDataset] = None,
) -> RedundancySweep:
    """
    Fooling ratio of UAPs crafted on shrinking per-class subsets of ``ds``.

    The full-set UAP and every subset UAP use ``cfg`` with augmentation off.
    Subsets are drawn with ``cfg.seed``. FRs are measured on ``eval_ds``
    (default ``ds``).

    Raises:
        ValueError: If counts are empty, not strictly descending, or exceed availability
    """
    counts = [int(c) for c in per_class_counts]
    if not counts:
        raise ValueError("per_class_counts cannot be empty")
    if any(a <= b for a, b in zip(counts, counts[1:])):
        raise ValueError(f"per_class_counts must be strictly descending, got {counts}")
    available = min(ds.class_counts)
    if counts[-1] < 1 or counts[0] > available:
        raise ValueError(f"per_class_counts must lie in [1, {available}], got {counts}")

    cfg = replace(cfg, augment=False)
    target = ds if eval_ds is None else eval_ds
    full_p = craft_uap(m, ds, cfg)
    full_fr = fooling_ratio(m, target, full_p)
    logger.info(f"Redundancy sweep on {m.model_id}: full-set FR={full_fr:.4f}")

    rows = []
    for n in counts:
        subset = subsample_per_class(ds, n, cfg.seed)
        p = full_p if subset == ds else craft_uap(m, subset, cfg)
        fr = fooling_ratio(m, target, p)
        rows.append(RedundancyRow(n, fr, fr / full_fr if full_fr > 0 else None))
        logger.info(f"  {n} per class: FR={fr:.4f}")
    return RedundancySweep(full_fr, tuple(rows))
