"""Synthetic datasets, their file format, and augmentation."""

from .augment import augment, augment_batch
from .storage import DATASET_MAGIC, load_dataset, save_dataset, sidecar_path
from .synthetic import (
    Image,
    LabeledDataset,
    class_templates,
    generate_synthetic,
    mean_templates,
    subsample_per_class,
)

__all__ = [
    "Image",
    "LabeledDataset",
    "class_templates",
    "generate_synthetic",
    "mean_templates",
    "subsample_per_class",
    "augment",
    "augment_batch",
    "DATASET_MAGIC",
    "save_dataset",
    "load_dataset",
    "sidecar_path",
]
