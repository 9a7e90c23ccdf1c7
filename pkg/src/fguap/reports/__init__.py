"""Report models and their JSON/CSV writers."""

from .models import AttackLog, ClassFooling, DatasetManifest, EvalReport, TrainSummary
from .writers import (
    HISTORY_HEADER,
    REDUNDANCY_HEADER,
    TRANSFER_HEADER,
    read_csv_rows,
    write_csv,
    write_history_csv,
    write_json,
    write_redundancy_csv,
    write_transfer_csv,
)

__all__ = [
    "AttackLog",
    "ClassFooling",
    "DatasetManifest",
    "EvalReport",
    "TrainSummary",
    "HISTORY_HEADER",
    "REDUNDANCY_HEADER",
    "TRANSFER_HEADER",
    "read_csv_rows",
    "write_csv",
    "write_history_csv",
    "write_json",
    "write_redundancy_csv",
    "write_transfer_csv",
]
