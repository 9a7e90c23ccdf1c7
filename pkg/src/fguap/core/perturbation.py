"""Universal perturbations, their application, and the UAPPERT1 file format.

Layout after the 8-byte magic ``UAPPERT1``: a length-prefixed key:value
metadata document (format_version, method, mode, target_class, xi,
surrogate_id, seed), the named tensor ``delta``, then CRC32.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from ..exceptions import (
    BudgetViolationError,
    MalformedHeaderError,
    ShapeMismatchError,
    VersionMismatchError,
)
from ..utils.containers import ContainerWriter, open_container, write_atomic
from ..utils.validators import validate_seed

logger = logging.getLogger(__name__)

PERTURBATION_MAGIC = b"UAPPERT1"
PERTURBATION_VERSION = 1
DEFAULT_XI = 10 / 255


class AttackMode(str, Enum):
    UNTARGETED = "untargeted"
    TARGETED = "targeted"


class AttackMethod(str, Enum):
    FG = "fg"
    LOGIT_COSINE = "logit-cosine"
    RANDOM = "random"


@dataclass(frozen=True, eq=False)
class Perturbation:
    """Image-shaped delta [C, H, W] with ``max|delta| <= xi`` and provenance."""

    delta: np.ndarray
    xi: float
    mode: AttackMode = AttackMode.UNTARGETED
    target_class: Optional[int] = None
    surrogate_id: str = ""
    seed: int = 0
    method: AttackMethod = AttackMethod.FG

    def __post_init__(self) -> None:
        delta = np.array(self.delta, dtype=np.float64)
        if delta.ndim != 3:
            raise ValueError(f"delta must have dims [C, H, W], got {delta.shape}")
        if not np.all(np.isfinite(delta)):
            raise ValueError("delta contains non-finite values")
        xi = float(self.xi)
        if not (np.isfinite(xi) and xi >= 0.0):
            raise ValueError(f"xi must be a finite value >= 0, got {self.xi}")
        linf = float(np.max(np.abs(delta))) if delta.size else 0.0
        if linf > xi:
            raise BudgetViolationError(f"perturbation max |delta| = {linf!r} exceeds xi = {xi!r}")
        mode = AttackMode(self.mode)
        if mode is AttackMode.TARGETED and (self.target_class is None or self.target_class < 0):
            raise ValueError("targeted perturbations need a non-negative target_class")
        if mode is AttackMode.UNTARGETED and self.target_class is not None:
            raise ValueError("untargeted perturbations carry no target_class")
        validate_seed(self.seed)
        delta.setflags(write=False)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "method", AttackMethod(self.method))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Perturbation):
            return NotImplemented
        return (
            self.metadata() == other.metadata()
            and self.delta.shape == other.delta.shape
            and self.delta.tobytes() == other.delta.tobytes()
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def input_shape(self) -> Tuple[int, int, int]:
        return tuple(int(d) for d in self.delta.shape)  # type: ignore[return-value]

    @property
    def linf(self) -> float:
        return float(np.max(np.abs(self.delta))) if self.delta.size else 0.0

    @property
    def perturbation_id(self) -> str:
        target = f"-t{self.target_class}" if self.mode is AttackMode.TARGETED else ""
        return f"{self.method.value}-{self.mode.value}{target}-{self.surrogate_id or 'none'}-s{self.seed}"

    def metadata(self) -> Dict[str, str]:
        return {
            "format_version": str(PERTURBATION_VERSION),
            "method": self.method.value,
            "mode": self.mode.value,
            "target_class": "" if self.target_class is None else str(self.target_class),
            "xi": repr(self.xi),
            "surrogate_id": self.surrogate_id,
            "seed": str(self.seed),
        }


def zero_perturbation(
    shape: Tuple[int, int, int], xi: float = DEFAULT_XI, surrogate_id: str = ""
) -> Perturbation:
    return Perturbation(np.zeros(shape), xi, surrogate_id=surrogate_id)


def random_perturbation(
    shape: Tuple[int, int, int],
    xi: float,
    seed: int,
    surrogate_id: str = "",
) -> Perturbation:
    """Reference perturbation with every pixel independently +xi or -xi."""
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=tuple(shape)) * 2 - 1
    return Perturbation(
        signs * float(xi), xi, surrogate_id=surrogate_id, seed=seed, method=AttackMethod.RANDOM
    )


def apply(p: Perturbation, x: np.ndarray) -> np.ndarray:
    """
    Add the perturbation and clip to the valid pixel range.

    Args:
        p: Perturbation
        x: Image [C, H, W] or batch [N, C, H, W]

    Returns:
        ``clip(x + delta, 0, 1)`` with the shape of ``x``

    Raises:
        ShapeMismatchError: If image dims differ from the perturbation's
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (3, 4) or x.shape[-3:] != p.delta.shape:
        raise ShapeMismatchError("apply", x.shape, p.delta.shape)
    return np.clip(x + p.delta, 0.0, 1.0)


def save_perturbation(p: Perturbation, path: Union[str, Path]) -> Path:
    writer = ContainerWriter(PERTURBATION_MAGIC).document(p.metadata()).tensor("delta", p.delta)
    path = write_atomic(path, writer.to_bytes())
    logger.info(f"Saved perturbation {p.perturbation_id} (linf={p.linf:.5f}) to {path}")
    return path


def load_perturbation(path: Union[str, Path]) -> Perturbation:
    """
    Read a perturbation written by ``save_perturbation``.

    Raises:
        NotAContainerError: Wrong magic ("not a perturbation file")
        BudgetViolationError: Stored delta exceeds the stored budget
        VersionMismatchError, MalformedHeaderError, TruncatedPayloadError, ChecksumMismatchError
    """
    reader = open_container(path, PERTURBATION_MAGIC, "perturbation")
    meta = reader.document()
    name, delta = reader.tensor()
    reader.finish()
    version = meta.get("format_version")
    if version != str(PERTURBATION_VERSION):
        raise VersionMismatchError(
            f"perturbation format version {version!r} is not supported (expected {PERTURBATION_VERSION})"
        )
    if name != "delta":
        raise MalformedHeaderError(f"expected tensor 'delta', found {name!r}")

    try:
        target = meta.get("target_class", "")
        fields = dict(
            xi=float(meta["xi"]),
            mode=AttackMode(meta["mode"]),
            target_class=int(target) if target else None,
            surrogate_id=meta.get("surrogate_id", ""),
            seed=int(meta["seed"]),
            method=AttackMethod(meta["method"]),
        )
    except (KeyError, ValueError) as e:
        raise MalformedHeaderError(f"invalid perturbation metadata: {e}") from e
    return Perturbation(delta, **fields)
