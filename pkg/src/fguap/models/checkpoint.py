"""UAPCKPT1 checkpoint files.

Layout after the 8-byte magic ``UAPCKPT1``: a length-prefixed key:value
metadata document, a u32 tensor count, the named tensors (name, rank, dims,
float64 payload), then CRC32 of everything after the magic.
"""

import logging
from pathlib import Path
from typing import Dict, Optional, Union

from ..exceptions import (
    ArchitectureMismatchError,
    MalformedHeaderError,
    ShapeMismatchError,
    TensorCountMismatchError,
    VersionMismatchError,
)
from ..utils.containers import ContainerWriter, open_container, write_atomic
from ..utils.validators import VALID_ARCHITECTURES
from .networks import Model, build

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"UAPCKPT1"
CHECKPOINT_VERSION = 1

# Keys written by save_checkpoint itself; everything else in Model.metadata is carried verbatim.
_STRUCTURAL_KEYS = (
    "format_version",
    "arch",
    "num_classes",
    "feature_dim",
    "input_shape",
    "seed",
    "model_id",
)


def save_checkpoint(m: Model, path: Union[str, Path]) -> Path:
    """Write all weights and metadata of ``m`` atomically."""
    meta: Dict[str, object] = {
        "format_version": CHECKPOINT_VERSION,
        "arch": m.arch,
        "num_classes": m.num_classes,
        "feature_dim": m.feature_dim,
        "input_shape": ",".join(str(d) for d in m.input_shape),
        "seed": m.seed,
        "model_id": m.model_id,
    }
    for key, value in m.metadata.items():
        if key not in meta:
            meta[key] = value

    params = m.named_parameters()
    writer = ContainerWriter(CHECKPOINT_MAGIC).document(meta).u32(len(params))
    for name, tensor in params.items():
        writer.tensor(name, tensor.data)
    path = write_atomic(path, writer.to_bytes())
    logger.info(f"Saved checkpoint {m.model_id} ({len(params)} tensors) to {path}")
    return path


def load_checkpoint(path: Union[str, Path], expected_arch: Optional[str] = None) -> Model:
    """
    Read a checkpoint written by ``save_checkpoint``.

    Args:
        path: Checkpoint file
        expected_arch: If given, the stored architecture must match

    Raises:
        NotAContainerError: Wrong magic ("not a checkpoint file")
        VersionMismatchError: Unsupported format version
        ArchitectureMismatchError: Stored architecture differs from ``expected_arch``
        TensorCountMismatchError: Tensor count differs from the architecture's
        TruncatedPayloadError, ChecksumMismatchError, MalformedHeaderError
    """
    reader = open_container(path, CHECKPOINT_MAGIC, "checkpoint")
    meta = reader.document()
    count = reader.u32()
    tensors = dict(reader.tensor() for _ in range(count))
    reader.finish()

    version = meta.get("format_version")
    if version != str(CHECKPOINT_VERSION):
        raise VersionMismatchError(
            f"checkpoint format version {version!r} is not supported (expected {CHECKPOINT_VERSION})"
        )
    arch = meta.get("arch", "")
    if arch not in VALID_ARCHITECTURES:
        raise MalformedHeaderError(f"checkpoint declares unknown architecture {arch!r}")
    if expected_arch is not None and arch != expected_arch:
        raise ArchitectureMismatchError(
            f"checkpoint holds a {arch} model, expected {expected_arch}"
        )

    try:
        num_classes = int(meta["num_classes"])
        seed = int(meta["seed"])
        input_shape = tuple(int(d) for d in meta["input_shape"].split(","))
        model = build(arch, num_classes, seed, input_shape)  # type: ignore[arg-type]
    except (KeyError, ValueError) as e:
        raise MalformedHeaderError(f"invalid checkpoint metadata: {e}") from e

    expected = model.named_parameters()
    if count != len(expected):
        raise TensorCountMismatchError(
            f"checkpoint holds {count} tensors, {arch} needs {len(expected)}"
        )

    try:
        model.load_parameters(tensors)
    except (KeyError, ShapeMismatchError) as e:
        raise MalformedHeaderError(f"checkpoint tensors do not fit {arch}: {e}") from e
    model.metadata = {k: v for k, v in meta.items() if k not in _STRUCTURAL_KEYS or k == "model_id"}
    logger.info(f"Loaded checkpoint {model.model_id} from {path}")
    return model
