"""Deterministic synthetic image classification data.

Each class owns a fixed template: a low-frequency 2-D cosine pattern unique to
the class plus a faint Gaussian blob whose position depends on the class.
Samples are the template shifted by up to two pixels (vacated pixels take the
background level), with Gaussian pixel noise and a global brightness offset,
clipped to [0, 1].
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..utils.validators import validate_seed, validate_split

logger = logging.getLogger(__name__)

# A single image is a float64 array [C, H, W] with values in [0, 1].
Image = np.ndarray

NOISE_SIGMA = 0.08
MAX_SHIFT = 2
BRIGHTNESS_JITTER = 0.1
BACKGROUND = 0.45
PATTERN_AMPLITUDE = 0.03
BLOB_AMPLITUDE = 0.03
BLOB_SIGMA = 0.1
BLOB_RADIUS = 0.3

DEFAULT_NUM_CLASSES = 8
DEFAULT_PER_CLASS_TRAIN = 200
DEFAULT_PER_CLASS_TEST = 50
DEFAULT_SIDE = 24


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Images [N, C, H, W] with integer labels in [0, num_classes)."""

    images: np.ndarray
    labels: np.ndarray
    num_classes: int
    split: str = "train"
    seed: int = 0
    _counts: Tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        images = np.array(self.images, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64)
        if images.ndim != 4:
            raise ValueError(f"images must have dims [N, C, H, W], got {images.shape}")
        if labels.ndim != 1 or labels.shape[0] != images.shape[0]:
            raise ValueError(
                f"labels ({labels.shape}) and images ({images.shape[0]}) must have equal length"
            )
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise ValueError(f"labels must lie in [0, {self.num_classes})")
        if images.size and (images.min() < 0.0 or images.max() > 1.0):
            raise ValueError("pixel values must lie in [0, 1]")
        validate_split(self.split)
        counts = tuple(int(c) for c in np.bincount(labels, minlength=self.num_classes))
        if self.split == "train" and labels.size and min(counts) == 0:
            missing = [c for c, n in enumerate(counts) if n == 0]
            raise ValueError(f"train split is missing classes {missing}")
        images.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_counts", counts)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.num_classes == other.num_classes
            and self.split == other.split
            and self.seed == other.seed
            and self.images.shape == other.images.shape
            and np.array_equal(self.labels, other.labels)
            and self.images.tobytes() == other.images.tobytes()
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def input_shape(self) -> Tuple[int, int, int]:
        return tuple(int(d) for d in self.images.shape[1:])  # type: ignore[return-value]

    @property
    def class_counts(self) -> Tuple[int, ...]:
        return self._counts

    @property
    def dataset_id(self) -> str:
        return f"{self.split}-s{self.seed}-k{self.num_classes}-n{len(self)}"

    def subset(self, indices: Sequence[int]) -> "LabeledDataset":
        """Samples at ``indices`` in the given order, same tags."""
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(
            self.images[idx], self.labels[idx], self.num_classes, self.split, self.seed
        )

    def summary(self) -> Dict[str, object]:
        return {
            "split": self.split,
            "seed": self.seed,
            "num_classes": self.num_classes,
            "num_samples": len(self),
            "input_shape": list(self.input_shape),
            "class_counts": list(self.class_counts),
        }


def _frequency_pairs(num_classes: int) -> List[Tuple[int, int]]:
    """Cosine frequency pairs (u, v) by increasing u + v, skipping (0, 0)."""
    pairs: List[Tuple[int, int]] = []
    total = 1
    while len(pairs) < num_classes:
        pairs.extend((u, total - u) for u in range(total, -1, -1))
        total += 1
    return pairs[:num_classes]


def class_templates(
    num_classes: int, side: int, amplitude: float = PATTERN_AMPLITUDE
) -> np.ndarray:
    """
    Noise-free class templates of dims [K, 1, side, side].

    Class c is the background level plus a separable cosine product
    cos(pi*u*(i+0.5)/side) * cos(pi*v*(j+0.5)/side) scaled to RMS ``amplitude``,
    plus a small Gaussian blob placed on a circle by class index. Cosine
    patterns of different classes are mutually orthogonal.
    """
    pairs = _frequency_pairs(num_classes)
    if max(max(pair) for pair in pairs) >= side:
        raise ValueError(f"side {side} is too small for {num_classes} distinct class patterns")
    coords = np.arange(side, dtype=np.float64) + 0.5
    yy, xx = np.meshgrid(coords / side, coords / side, indexing="ij")
    templates = np.empty((num_classes, 1, side, side))
    for c, (u, v) in enumerate(pairs):
        pattern = np.outer(np.cos(np.pi * u * coords / side), np.cos(np.pi * v * coords / side))
        pattern *= amplitude / np.sqrt(np.mean(pattern**2))
        angle = 2.0 * np.pi * c / num_classes
        cx = 0.5 + BLOB_RADIUS * np.cos(angle)
        cy = 0.5 + BLOB_RADIUS * np.sin(angle)
        blob = BLOB_AMPLITUDE * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * BLOB_SIGMA**2))
        templates[c, 0] = np.clip(BACKGROUND + pattern + blob, 0.0, 1.0)
    return templates


def _shift(image: np.ndarray, dy: int, dx: int, fill: float = BACKGROUND) -> np.ndarray:
    """Integer translation of [C, H, W]; vacated pixels take ``fill``."""
    out = np.full_like(image, fill)
    h, w = image.shape[1:]
    src_y = slice(max(0, -dy), min(h, h - dy))
    dst_y = slice(max(0, dy), min(h, h + dy))
    src_x = slice(max(0, -dx), min(w, w - dx))
    dst_x = slice(max(0, dx), min(w, w + dx))
    out[:, dst_y, dst_x] = image[:, src_y, src_x]
    return out


def _sample_split(
    templates: np.ndarray,
    per_class: int,
    rng: np.random.Generator,
    split: str,
    seed: int,
) -> LabeledDataset:
    num_classes = templates.shape[0]
    n = num_classes * per_class
    labels = np.tile(np.arange(num_classes), per_class)
    shifts = rng.integers(-MAX_SHIFT, MAX_SHIFT + 1, size=(n, 2))
    noise = rng.normal(0.0, NOISE_SIGMA, size=(n,) + templates.shape[1:])
    brightness = rng.uniform(-BRIGHTNESS_JITTER, BRIGHTNESS_JITTER, size=n)

    images = np.empty((n,) + templates.shape[1:])
    for i in range(n):
        shifted = _shift(templates[labels[i]], int(shifts[i, 0]), int(shifts[i, 1]))
        images[i] = np.clip(shifted + noise[i] + brightness[i], 0.0, 1.0)
    return LabeledDataset(images, labels, num_classes, split, seed)


def generate_synthetic(
    seed: int,
    num_classes: int = DEFAULT_NUM_CLASSES,
    per_class_train: int = DEFAULT_PER_CLASS_TRAIN,
    per_class_test: int = DEFAULT_PER_CLASS_TEST,
    side: int = DEFAULT_SIDE,
    amplitude: float = PATTERN_AMPLITUDE,
) -> Tuple[LabeledDataset, LabeledDataset]:
    """
    Generate a (train, test) pair of grayscale datasets.

    Samples are ordered class-interleaved (0, 1, ..., K-1, 0, 1, ...). The train
    and test splits draw from independent child streams of ``seed``.

    Args:
        seed: Generation seed (>= 0)
        num_classes: Number of classes K (>= 2)
        per_class_train: Train samples per class (>= 1)
        per_class_test: Test samples per class (>= 1)
        side: Image height and width in pixels (>= 8)
        amplitude: RMS of each class cosine pattern (> 0)

    Returns:
        Tuple of (train, test) LabeledDataset

    Raises:
        ValueError: If any count is out of range
    """
    validate_seed(seed)
    if num_classes < 2:
        raise ValueError(f"num_classes must be >= 2, got {num_classes}")
    if side < 8:
        raise ValueError(f"side must be >= 8, got {side}")
    if per_class_train < 1 or per_class_test < 1:
        raise ValueError(
            f"per-class counts must be >= 1, got train={per_class_train}, test={per_class_test}"
        )
    if not amplitude > 0.0:
        raise ValueError(f"amplitude must be > 0, got {amplitude}")

    templates = class_templates(num_classes, side, amplitude)
    train_seq, test_seq = np.random.SeedSequence(seed).spawn(2)
    train = _sample_split(templates, per_class_train, np.random.default_rng(train_seq), "train", seed)
    test = _sample_split(templates, per_class_test, np.random.default_rng(test_seq), "test", seed)
    logger.info(
        f"Generated synthetic data: seed={seed} K={num_classes} side={side} "
        f"train={len(train)} test={len(test)}"
    )
    return train, test


def subsample_per_class(ds: LabeledDataset, n_per_class: int, seed: int) -> LabeledDataset:
    """
    Keep exactly ``n_per_class`` samples of every class.

    Samples are drawn uniformly without replacement per class with ``seed``;
    the survivors keep their original relative order.

    Raises:
        ValueError: If n_per_class < 1 or exceeds a class's available count
    """
    if n_per_class < 1:
        raise ValueError(f"n_per_class must be >= 1, got {n_per_class}")
    available = ds.class_counts
    short = [c for c, count in enumerate(available) if count < n_per_class]
    if short:
        raise ValueError(
            f"n_per_class={n_per_class} exceeds the available count for classes {short} "
            f"(counts {list(available)})"
        )
    rng = np.random.default_rng(seed)
    chosen = []
    for c in range(ds.num_classes):
        members = np.flatnonzero(ds.labels == c)
        chosen.append(rng.choice(members, size=n_per_class, replace=False))
    indices = np.sort(np.concatenate(chosen))
    logger.debug(f"Subsampled {len(indices)} of {len(ds)} samples ({n_per_class} per class)")
    return ds.subset(indices)


def mean_templates(ds: LabeledDataset) -> np.ndarray:
    """Per-class mean image [K, C, H, W] (classes with no samples stay zero)."""
    means = np.zeros((ds.num_classes,) + ds.input_shape)
    for c in range(ds.num_classes):
        members = ds.images[ds.labels == c]
        if len(members):
            means[c] = members.mean(axis=0)
    return means

