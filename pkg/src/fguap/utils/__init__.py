"""Utility modules."""

from .image_utils import array_to_image, dataset_preview, perturbation_to_image, save_perturbation_png
from .validators import parse_budget, sanitize_identifier, validate_arch, validate_class_index, validate_seed

__all__ = [
    "array_to_image",
    "dataset_preview",
    "perturbation_to_image",
    "save_perturbation_png",
    "parse_budget",
    "sanitize_identifier",
    "validate_arch",
    "validate_class_index",
    "validate_seed",
]
