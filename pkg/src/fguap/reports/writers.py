"""JSON and CSV writers for reports and tables.

Floats are written with ``repr`` so identical runs give byte-identical files.
"""

import csv
import io
import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from pydantic import BaseModel

from ..utils.containers import write_text_atomic

logger = logging.getLogger(__name__)

TRANSFER_HEADER = ("surrogate", "victim", "fr")
REDUNDANCY_HEADER = ("count", "fr", "ratio_to_full")
HISTORY_HEADER = ("epoch", "loss", "train_acc", "test_acc")


def _cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _render_csv(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_json(model: BaseModel, path: Union[str, Path]) -> Path:
    """Serialise a report model as indented JSON."""
    path = write_text_atomic(path, model.model_dump_json(indent=2) + "\n")
    logger.info(f"Wrote {type(model).__name__} to {path}")
    return path


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    path = write_text_atomic(path, _render_csv(header, rows))
    logger.info(f"Wrote table to {path}")
    return path


def write_transfer_csv(matrix, path: Union[str, Path]) -> Path:
    """One ``surrogate,victim,fr`` row per matrix entry, surrogate-major."""
    return write_csv(path, TRANSFER_HEADER, matrix.rows())


def write_redundancy_csv(sweep, path: Union[str, Path]) -> Path:
    return write_csv(path, REDUNDANCY_HEADER, ((r.count, r.fr, r.ratio_to_full) for r in sweep.rows))


def write_history_csv(history, path: Union[str, Path]) -> Path:
    return write_csv(path, HISTORY_HEADER, ((r.epoch, r.loss, r.train_acc, r.test_acc) for r in history))


def read_csv_rows(path: Union[str, Path], header: Optional[Sequence[str]] = None) -> list:
    """Read a table written by ``write_csv``; optionally check its header."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if header is not None and (not rows or tuple(rows[0]) != tuple(header)):
        raise ValueError(f"{path}: expected header {','.join(header)}")
    return rows[1:]
