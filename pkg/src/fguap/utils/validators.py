"""Input validation utilities."""

import re
from typing import Union

VALID_ARCHITECTURES = ("convnet", "mlp", "attnnet")
VALID_SPLITS = ("train", "test")


def validate_arch(arch: str) -> None:
    """
    Validate an architecture tag.

    Raises:
        ValueError: If the tag is unknown
    """
    if arch not in VALID_ARCHITECTURES:
        raise ValueError(
            f"Invalid architecture '{arch}'. Must be one of: {', '.join(VALID_ARCHITECTURES)}"
        )


def validate_split(split: str) -> None:
    if split not in VALID_SPLITS:
        raise ValueError(f"Invalid split '{split}'. Must be one of: {', '.join(VALID_SPLITS)}")


def validate_seed(seed: int) -> None:
    """Seeds are non-negative integers (numpy SeedSequence entropy)."""
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ValueError(f"Seed must be an integer, got {seed!r}")
    if seed < 0:
        raise ValueError(f"Seed must be >= 0, got {seed}")


def validate_class_index(index: int, num_classes: int) -> None:
    """
    Validate a class index against the number of classes.

    Raises:
        ValueError: If index is outside [0, num_classes)
    """
    if isinstance(index, bool) or not isinstance(index, int):
        raise ValueError(f"Class index must be an integer, got {index!r}")
    if not 0 <= index < num_classes:
        raise ValueError(f"Class index {index} out of range [0, {num_classes})")


def parse_budget(value: Union[str, float, int]) -> float:
    """
    Parse an L-infinity budget given as a real or a fraction.

    Examples:
        >>> parse_budget("10/255") == 10 / 255
        True
        >>> parse_budget(0.5)
        0.5

    Raises:
        ValueError: If the value is malformed or negative
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        xi = float(value)
    else:
        text = str(value).strip()
        if "/" in text:
            num, _, den = text.partition("/")
            try:
                xi = float(num) / float(den)
            except (ValueError, ZeroDivisionError):
                raise ValueError(f"Invalid budget '{value}'") from None
        else:
            try:
                xi = float(text)
            except ValueError:
                raise ValueError(f"Invalid budget '{value}'") from None
    if not xi >= 0.0 or xi == float("inf"):
        raise ValueError(f"Budget must be a finite value >= 0, got {value}")
    return xi


def sanitize_identifier(name: str) -> str:
    """
    Make a model or run identifier safe for use as a file stem.

    Examples:
        >>> sanitize_identifier("convnet-s0")
        'convnet-s0'
        >>> sanitize_identifier("mlp seed/3")
        'mlp_seed_3'
    """
    name = re.sub(r"[^A-Za-z0-9\-_.]+", "_", name.strip())
    return name.strip("_") or "unnamed"
