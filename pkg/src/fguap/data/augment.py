"""Rotation and horizontal-flip augmentation for mini-set attacks."""

import logging
from typing import Optional, Sequence, Union

import numpy as np
from scipy import ndimage

from .synthetic import Image

logger = logging.getLogger(__name__)

MAX_ROTATION_DEG = 15.0
FLIP_PROBABILITY = 0.5

SeedLike = Union[int, Sequence[int]]


def augment(
    img: Image,
    seed: SeedLike,
    angle: Optional[float] = None,
    flip: Optional[bool] = None,
) -> Image:
    """
    Randomly rotate and horizontally flip an image.

    The angle is drawn uniformly from [-15, 15] degrees and the flip with
    probability 0.5, both from ``seed``. Rotation is bilinear with zero
    padding and keeps the image size. ``angle``/``flip`` override the draws.

    Args:
        img: Image [C, H, W] in [0, 1]
        seed: Integer seed or sequence of integers
        angle: Forced rotation in degrees
        flip: Forced flip decision

    Returns:
        Augmented image [C, H, W] clipped to [0, 1]
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3:
        raise ValueError(f"augment expects an image [C, H, W], got dims {img.shape}")
    rng = np.random.default_rng(seed)
    drawn_angle = rng.uniform(-MAX_ROTATION_DEG, MAX_ROTATION_DEG)
    drawn_flip = bool(rng.random() < FLIP_PROBABILITY)
    angle = drawn_angle if angle is None else float(angle)
    flip = drawn_flip if flip is None else bool(flip)

    out = img
    if angle != 0.0:
        out = ndimage.rotate(
            out, angle, axes=(1, 2), reshape=False, order=1, mode="constant", cval=0.0
        )
    if flip:
        out = out[:, :, ::-1]
    return np.clip(out, 0.0, 1.0)


def augment_batch(images: np.ndarray, seed: int, epoch: int, indices: Sequence[int]) -> np.ndarray:
    """Augment each image of a batch with a seed derived from (seed, epoch, sample index)."""
    return np.stack(
        [augment(img, [seed, epoch, int(i)]) for img, i in zip(images, indices)]
    )
