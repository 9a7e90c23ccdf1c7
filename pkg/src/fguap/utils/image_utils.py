"""PNG export of perturbations and dataset samples for inspection."""

import logging
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

logger = logging.getLogger(__name__)


def array_to_image(pixels: np.ndarray, scale: int = 1) -> Image.Image:
    """
    Convert a [C, H, W] or [H, W] array in [0, 1] to a PIL image.

    Args:
        pixels: Values in [0, 1]; one channel gives mode "L", three give "RGB"
        scale: Integer upscaling factor (nearest neighbour)

    Raises:
        ValueError: If the array has an unsupported shape or scale < 1
    """
    if scale < 1:
        raise ValueError("Scale must be >= 1")
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim == 3:
        if arr.shape[0] == 1:
            arr = arr[0]
        elif arr.shape[0] == 3:
            arr = arr.transpose(1, 2, 0)
        else:
            raise ValueError(f"Unsupported channel count {arr.shape[0]}")
    elif arr.ndim != 2:
        raise ValueError(f"Unsupported image dims {arr.shape}")

    data = np.round(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    image = Image.fromarray(data, mode="L" if data.ndim == 2 else "RGB")
    if scale > 1:
        image = image.resize((image.width * scale, image.height * scale), Image.NEAREST)
    return image


def perturbation_to_image(delta: np.ndarray, xi: float, scale: int = 8) -> Image.Image:
    """Render delta with -xi as black, 0 as mid-gray and +xi as white."""
    if xi > 0:
        normalized = 0.5 + 0.5 * np.asarray(delta) / xi
    else:
        normalized = np.full(np.shape(delta), 0.5)
    return array_to_image(normalized, scale)


def save_perturbation_png(p, path: Union[str, Path], scale: int = 8) -> Path:
    """Save a Perturbation's delta as a PNG."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    perturbation_to_image(p.delta, p.xi, scale).save(path, format="PNG")
    logger.info(f"Saved perturbation image to {path}")
    return path


def dataset_preview(ds, path: Union[str, Path], per_class: int = 8, scale: int = 2) -> Path:
    """
    Save a grid PNG with one row per class and up to ``per_class`` samples per row.
    """
    c, h, w = ds.input_shape
    grid = np.zeros((c, ds.num_classes * h, per_class * w))
    for k in range(ds.num_classes):
        members = np.flatnonzero(ds.labels == k)[:per_class]
        for col, idx in enumerate(members):
            grid[:, k * h : (k + 1) * h, col * w : (col + 1) * w] = ds.images[idx]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    array_to_image(grid, scale).save(path, format="PNG")
    logger.info(f"Saved dataset preview ({ds.num_classes} classes) to {path}")
    return path
