"""Fooling, dominance and feature-gathering metrics, and the report builder."""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..data.synthetic import LabeledDataset
from ..exceptions import DegenerateFeatureError, ShapeMismatchError, UndefinedMetricError
from ..models.networks import Model
from ..reports.models import ClassFooling, EvalReport
from ..utils.validators import validate_class_index
from .collapse import nc_report
from .perturbation import AttackMode, Perturbation, apply

logger = logging.getLogger(__name__)

CANVAS_LEVEL = 0.5


def _check_inputs(m: Model, ds: LabeledDataset, p: Perturbation) -> None:
    if len(ds) == 0:
        raise ValueError("Cannot evaluate on an empty dataset")
    if p.input_shape != m.input_shape:
        raise ShapeMismatchError("evaluate", p.input_shape, m.input_shape, "perturbation vs model input")
    if ds.input_shape != m.input_shape:
        raise ShapeMismatchError("evaluate", ds.input_shape, m.input_shape, "dataset vs model input")


def fooling_ratio(m: Model, ds: LabeledDataset, p: Perturbation) -> float:
    """Fraction of all samples whose prediction changes under ``p``."""
    _check_inputs(m, ds, p)
    clean = m.predict_batch(ds.images)
    adv = m.predict_batch(apply(p, ds.images))
    return int(np.count_nonzero(clean != adv)) / len(ds)


def targeted_fooling_ratio(m: Model, ds: LabeledDataset, p: Perturbation, target: int) -> float:
    """Fraction of perturbed samples predicted exactly as ``target``."""
    validate_class_index(target, m.num_classes)
    _check_inputs(m, ds, p)
    adv = m.predict_batch(apply(p, ds.images))
    return int(np.count_nonzero(adv == target)) / len(ds)


def _frequency_order(predictions: np.ndarray, num_classes: Optional[int]) -> Tuple[np.ndarray, np.ndarray]:
    counts = np.bincount(predictions, minlength=num_classes or 0)
    classes = np.arange(counts.size)
    # most frequent first, lowest class index on ties
    order = np.lexsort((classes, -counts))
    return classes[order], counts[order]


def dominance_ratio(predictions: Sequence[int], k: int, num_classes: Optional[int] = None) -> float:
    """
    Share of predictions in the ``k`` most frequent classes.

    Raises:
        ValueError: If k < 1 or predictions is empty
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    preds = np.asarray(predictions, dtype=np.int64)
    if preds.size == 0:
        raise ValueError("dominance_ratio needs at least one prediction")
    _, counts = _frequency_order(preds, num_classes)
    return int(counts[:k].sum()) / int(preds.size)


def dominance_rank(predictions: Sequence[int], cls: int, num_classes: int) -> int:
    """1-based position of ``cls`` in the frequency-sorted histogram over all K classes."""
    validate_class_index(cls, num_classes)
    classes, _ = _frequency_order(np.asarray(predictions, dtype=np.int64), num_classes)
    return int(np.flatnonzero(classes == cls)[0]) + 1


def uap_canvas(p: Perturbation) -> np.ndarray:
    """The perturbation rendered on a mid-gray image, clipped to [0, 1]."""
    return np.clip(CANVAS_LEVEL + p.delta, 0.0, 1.0)


def dominant_class_check(m: Model, ds: LabeledDataset, p: Perturbation) -> Tuple[int, int]:
    """Return (the model's class for the perturbation itself, its dominance rank)."""
    _check_inputs(m, ds, p)
    uap_class = int(m.predict_batch(uap_canvas(p))[0])
    adv = m.predict_batch(apply(p, ds.images))
    return uap_class, dominance_rank(adv, uap_class, m.num_classes)


def per_class_fooling(m: Model, ds: LabeledDataset, p: Perturbation) -> List[ClassFooling]:
    """Fooling ratio per ground-truth class (classes without samples report 0)."""
    _check_inputs(m, ds, p)
    changed = m.predict_batch(ds.images) != m.predict_batch(apply(p, ds.images))
    rows = []
    for c in range(m.num_classes):
        members = ds.labels == c
        count = int(np.count_nonzero(members))
        ratio = int(np.count_nonzero(changed[members])) / count if count else 0.0
        rows.append(ClassFooling(class_index=c, count=count, fooling_ratio=ratio))
    return rows


def _mean_cosine(features: np.ndarray, anchor: np.ndarray) -> float:
    norms = np.linalg.norm(features, axis=1)
    valid = norms > 0
    if not np.any(valid):
        raise DegenerateFeatureError("all features have zero norm")
    cos = features[valid] @ anchor / (norms[valid] * np.linalg.norm(anchor))
    return float(np.mean(np.clip(cos, -1.0, 1.0)))


def feature_gathering(m: Model, ds: LabeledDataset, p: Perturbation) -> Tuple[float, float]:
    """
    Mean cosine of clean and of perturbed features to the feature of the
    perturbation on a mid-gray canvas.

    Returns:
        (clean, perturbed); perturbed exceeding clean means the features
        gathered toward the perturbation's own direction

    Raises:
        DegenerateFeatureError: If the canvas feature has zero norm
    """
    _check_inputs(m, ds, p)
    anchor = m.extract_features(uap_canvas(p))[0]
    if not np.any(anchor):
        raise DegenerateFeatureError("perturbation canvas has a zero-norm feature")
    clean = _mean_cosine(m.extract_features(ds.images), anchor)
    perturbed = _mean_cosine(m.extract_features(apply(p, ds.images)), anchor)
    return clean, perturbed


class UAPEvaluator:
    """
    Builds EvalReports for (victim model, perturbation, split) triples.

    Collapse and feature-gathering values that are undefined for a given
    input are reported as None and logged as warnings.
    """

    DOMINANCE_KS = (1, 3, 5)

    def __init__(self, include_collapse: bool = True, include_per_class: bool = True):
        self.include_collapse = include_collapse
        self.include_per_class = include_per_class

    def evaluate(self, m: Model, ds: LabeledDataset, p: Perturbation) -> EvalReport:
        """
        Evaluate ``p`` against ``m`` on ``ds``.

        Raises:
            ShapeMismatchError: If the perturbation was crafted for another input shape
            ValueError: If the dataset is empty or a target is out of range
        """
        _check_inputs(m, ds, p)
        logger.info(f"Evaluating {p.perturbation_id} on {m.model_id} ({ds.dataset_id})")

        clean_pred = m.predict_batch(ds.images)
        adv_pred = m.predict_batch(apply(p, ds.images))
        n = len(ds)
        d1, d3, d5 = (dominance_ratio(adv_pred, k, m.num_classes) for k in self.DOMINANCE_KS)
        uap_class, uap_rank = dominant_class_check(m, ds, p)

        tfr = clean_target = None
        if p.mode is AttackMode.TARGETED:
            validate_class_index(p.target_class, m.num_classes)
            tfr = int(np.count_nonzero(adv_pred == p.target_class)) / n
            clean_target = int(np.count_nonzero(clean_pred == p.target_class)) / n

        nc_clean = nc_perturbed = None
        if self.include_collapse:
            try:
                nc = nc_report(m, ds, p)
                nc_clean, nc_perturbed = nc.metric_clean, nc.metric_perturbed
            except UndefinedMetricError as e:
                logger.warning(f"Collapse metric undefined for {p.perturbation_id}: {e}")

        fg_clean = fg_perturbed = None
        try:
            fg_clean, fg_perturbed = feature_gathering(m, ds, p)
        except DegenerateFeatureError as e:
            logger.warning(f"Feature gathering undefined for {p.perturbation_id}: {e}")

        report = EvalReport(
            model_id=m.model_id,
            perturbation_id=p.perturbation_id,
            dataset_id=ds.dataset_id,
            surrogate_id=p.surrogate_id,
            method=p.method.value,
            mode=p.mode.value,
            target_class=p.target_class,
            xi=p.xi,
            linf=p.linf,
            num_samples=n,
            clean_accuracy=int(np.count_nonzero(clean_pred == ds.labels)) / n,
            fooling_ratio=int(np.count_nonzero(clean_pred != adv_pred)) / n,
            targeted_fooling_ratio=tfr,
            clean_target_fraction=clean_target,
            dominance_1=d1,
            dominance_3=d3,
            dominance_5=d5,
            dominant_class=int(_frequency_order(adv_pred, m.num_classes)[0][0]),
            uap_class=uap_class,
            uap_class_rank=uap_rank,
            nc_metric_clean=nc_clean,
            nc_metric_perturbed=nc_perturbed,
            feature_gathering_clean=fg_clean,
            feature_gathering_perturbed=fg_perturbed,
            per_class=per_class_fooling(m, ds, p) if self.include_per_class else [],
        )
        logger.info(
            f"FR={report.fooling_ratio:.4f} D1={report.dominance_1:.4f} "
            f"uap_class={uap_class} (rank {uap_rank})"
        )
        if uap_rank != 1:
            logger.warning(
                f"Perturbation class {uap_class} is not the most frequent perturbed prediction (rank {uap_rank})"
            )
        return report
