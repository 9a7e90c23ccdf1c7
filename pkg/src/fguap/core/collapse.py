"""Neural-collapse covariance statistics of last-layer features.

Sigma_W averages within-class outer products over all samples; Sigma_B
averages mean-deviation outer products over classes, with the global mean
taken as the unweighted mean of the class means. The collapse metric is
``Tr(Sigma_W @ pinv(Sigma_B))``.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..autodiff import Tensor
from ..data.synthetic import LabeledDataset
from ..exceptions import ShapeMismatchError, UndefinedMetricError
from ..models.networks import Model
from .perturbation import Perturbation, apply, zero_perturbation

logger = logging.getLogger(__name__)

MIN_CLASS_MEMBERS = 2


@dataclass(frozen=True)
class CovarianceStats:
    class_means: np.ndarray  # [K, d]
    global_mean: np.ndarray  # [d]
    sigma_w: np.ndarray  # [d, d]
    sigma_b: np.ndarray  # [d, d]
    counts: Tuple[int, ...]

    @property
    def num_classes(self) -> int:
        return int(self.class_means.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.class_means.shape[1])


@dataclass(frozen=True)
class NCReport:
    metric_clean: float
    metric_perturbed: float
    classes_clean: int
    classes_perturbed: int


def _symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


def covariance_stats(
    features: Union[Tensor, np.ndarray],
    labels: Sequence[int],
    num_classes: Optional[int] = None,
) -> CovarianceStats:
    """
    Class means, global mean, Sigma_W and Sigma_B of ``features`` [N, d].

    Samples are reduced in a canonical order (by label, then by feature
    values), so any permutation of the inputs yields bit-identical results.

    Args:
        features: Feature matrix [N, d]
        labels: Class index per row
        num_classes: K; defaults to ``max(labels) + 1``

    Raises:
        ValueError: If a class in [0, K) has no samples or N < K
        ShapeMismatchError: If labels and features disagree in length
    """
    feats = features.data if isinstance(features, Tensor) else np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if feats.ndim != 2:
        raise ValueError(f"features must have dims [N, d], got {feats.shape}")
    if labels.shape != (feats.shape[0],):
        raise ShapeMismatchError("covariance_stats", feats.shape, labels.shape, "labels per row")
    if labels.size == 0:
        raise ValueError("covariance_stats needs at least one sample")
    if labels.min() < 0:
        raise ValueError("labels must be non-negative")
    k = int(labels.max()) + 1 if num_classes is None else int(num_classes)
    if labels.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    n, d = feats.shape
    if n < k:
        raise ValueError(f"covariance_stats needs N >= K, got N={n}, K={k}")
    counts = np.bincount(labels, minlength=k)
    missing = np.flatnonzero(counts == 0)
    if missing.size:
        raise ValueError(f"missing class(es) {missing.tolist()} in covariance_stats")

    keys = tuple(feats[:, j] for j in reversed(range(d))) + (labels,)
    order = np.lexsort(keys)
    feats, labels = feats[order], labels[order]

    class_means = np.empty((k, d))
    for c in range(k):
        class_means[c] = feats[labels == c].sum(axis=0) / counts[c]
    global_mean = class_means.sum(axis=0) / k

    within = feats - class_means[labels]
    sigma_w = _symmetrize(within.T @ within / n)
    between = class_means - global_mean
    sigma_b = _symmetrize(between.T @ between / k)
    return CovarianceStats(class_means, global_mean, sigma_w, sigma_b, tuple(int(c) for c in counts))


def pseudo_inverse(matrix: np.ndarray) -> np.ndarray:
    """
    Moore-Penrose pseudoinverse of a symmetric PSD matrix via ``eigh``.

    Eigenvalues at or below ``d * eps * lambda_max`` are treated as zero.
    """
    eigvals, eigvecs = np.linalg.eigh(matrix)
    lam_max = float(np.max(eigvals)) if eigvals.size else 0.0
    tol = matrix.shape[0] * np.finfo(np.float64).eps * lam_max
    inv = np.zeros_like(eigvals)
    keep = eigvals > tol
    inv[keep] = 1.0 / eigvals[keep]
    return (eigvecs * inv) @ eigvecs.T


def nc_metric(stats: CovarianceStats) -> float:
    """
    ``Tr(Sigma_W @ pinv(Sigma_B))``.

    Raises:
        UndefinedMetricError: If Sigma_B is identically zero
    """
    if not np.any(stats.sigma_b):
        raise UndefinedMetricError("between-class covariance is zero; collapse metric undefined")
    if float(np.max(np.linalg.eigvalsh(stats.sigma_b))) <= 0.0:
        raise UndefinedMetricError("between-class covariance has no positive eigenvalue")
    return float(np.trace(stats.sigma_w @ pseudo_inverse(stats.sigma_b)))


def grouped_metric(features: np.ndarray, labels: np.ndarray) -> Tuple[float, int]:
    """
    Collapse metric over classes with at least two members.

    Returns:
        (metric, number of classes used)

    Raises:
        UndefinedMetricError: If fewer than two classes survive
    """
    labels = np.asarray(labels, dtype=np.int64)
    classes, counts = np.unique(labels, return_counts=True)
    kept = classes[counts >= MIN_CLASS_MEMBERS]
    if kept.size < 2:
        raise UndefinedMetricError(
            f"collapse metric needs >= 2 classes with >= {MIN_CLASS_MEMBERS} members, got {kept.size}"
        )
    dropped = classes[counts < MIN_CLASS_MEMBERS]
    if dropped.size:
        logger.debug(f"Excluding sparse classes {dropped.tolist()} from collapse metric")
    mask = np.isin(labels, kept)
    remapped = np.searchsorted(kept, labels[mask])
    stats = covariance_stats(features[mask], remapped, num_classes=int(kept.size))
    return nc_metric(stats), int(kept.size)


def nc_report(m: Model, ds: LabeledDataset, p: Optional[Perturbation] = None) -> NCReport:
    """
    Collapse metric before and after perturbation.

    The clean metric groups clean features by ground-truth label. The perturbed
    metric groups features of ``apply(p, x)`` by the model's prediction on the
    perturbed input. ``p=None`` means the zero perturbation.

    Raises:
        UndefinedMetricError: If either grouping keeps fewer than two classes
    """
    if p is None:
        p = zero_perturbation(m.input_shape)
    clean_feats = m.extract_features(ds.images)
    clean_metric, clean_classes = grouped_metric(clean_feats, ds.labels)

    adv_images = apply(p, ds.images)
    adv_logits = m.predict_logits(adv_images)
    adv_feats = m.extract_features(adv_images)
    adv_metric, adv_classes = grouped_metric(adv_feats, np.argmax(adv_logits, axis=1))
    logger.info(f"Collapse metric on {m.model_id}: clean={clean_metric:.6g} perturbed={adv_metric:.6g}")
    return NCReport(clean_metric, adv_metric, clean_classes, adv_classes)
