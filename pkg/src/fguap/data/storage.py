"""UAPDATA1 dataset files.

Layout after the 8-byte magic ``UAPDATA1``: u32 fields K, N, C, H, W; N u16
labels; N*C*H*W float64 pixels (little-endian, row-major); CRC32 of
everything after the magic.

The split tag and generation seed are not part of the layout. They live in a
``<file>.meta`` key:value sidecar written next to the dataset file.
"""

import logging
from pathlib import Path
from typing import Dict, Optional, Union

from ..exceptions import MalformedHeaderError
from ..utils.containers import (
    ContainerWriter,
    open_container,
    parse_document,
    render_document,
    write_atomic,
    write_text_atomic,
)
from .synthetic import LabeledDataset

logger = logging.getLogger(__name__)

DATASET_MAGIC = b"UAPDATA1"
SIDECAR_SUFFIX = ".meta"
DEFAULT_SPLIT = "test"
DEFAULT_SEED = 0


def sidecar_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + SIDECAR_SUFFIX)


def save_dataset(ds: LabeledDataset, path: Union[str, Path]) -> Path:
    """Write ``ds`` to ``path`` atomically, plus its split/seed sidecar."""
    n = len(ds)
    c, h, w = ds.input_shape
    writer = ContainerWriter(DATASET_MAGIC)
    for value in (ds.num_classes, n, c, h, w):
        writer.u32(value)
    writer.u16_array(ds.labels)
    writer.f64_array(ds.images)
    path = write_atomic(path, writer.to_bytes())
    write_text_atomic(sidecar_path(path), render_document({"split": ds.split, "seed": ds.seed}) + "\n")
    logger.info(f"Saved {ds.dataset_id} dataset to {path}")
    return path


def _read_sidecar(path: Path) -> Dict[str, str]:
    meta_path = sidecar_path(path)
    if not meta_path.exists():
        logger.warning(
            f"No {meta_path.name} next to {path}; assuming split={DEFAULT_SPLIT} seed={DEFAULT_SEED}"
        )
        return {}
    try:
        return parse_document(meta_path.read_text(encoding="utf-8"))
    except UnicodeDecodeError as e:
        raise MalformedHeaderError(f"invalid UTF-8 in {meta_path}: {e}") from e


def load_dataset(
    path: Union[str, Path], split: Optional[str] = None, seed: Optional[int] = None
) -> LabeledDataset:
    """
    Read a dataset written by ``save_dataset``.

    Split and seed come from the arguments when given, else from the sidecar,
    else default to "test" and 0 (a test split carries no class-coverage
    requirement, so any valid file loads).

    Raises:
        NotAContainerError: Wrong magic ("not a dataset file")
        TruncatedPayloadError: File shorter than its header declares
        ChecksumMismatchError: Payload does not match the stored CRC32
        MalformedHeaderError: Header, contents or sidecar cannot be interpreted
    """
    path = Path(path)
    reader = open_container(path, DATASET_MAGIC, "dataset")
    k, n, c, h, w = (reader.u32() for _ in range(5))
    labels = reader.u16_array(n)
    images = reader.f64_array((n, c, h, w))
    reader.finish()

    meta = _read_sidecar(path) if split is None or seed is None else {}
    try:
        split = split if split is not None else meta.get("split", DEFAULT_SPLIT)
        seed = seed if seed is not None else int(meta.get("seed", str(DEFAULT_SEED)))
        return LabeledDataset(images, labels, k, split, seed)
    except ValueError as e:
        raise MalformedHeaderError(f"invalid dataset contents: {e}") from e
