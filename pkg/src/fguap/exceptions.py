"""Exception hierarchy for the FG-UAP toolkit.

Every error raised on purpose by the package derives from ``FGUAPError`` and
from the builtin exception a caller would naturally catch (``ValueError`` for
bad inputs, ``RuntimeError`` for failed optimisations), so both
``except FGUAPError`` and ``except ValueError`` work.
"""

from typing import Optional, Sequence, Tuple


class FGUAPError(Exception):
    """Base class for all toolkit errors."""


class ShapeMismatchError(FGUAPError, ValueError):
    """Two operands (or an operand and an expectation) disagree on shape."""

    def __init__(
        self,
        op: str,
        shape_a: Sequence[int],
        shape_b: Sequence[int],
        detail: Optional[str] = None,
    ):
        self.op = op
        self.shape_a: Tuple[int, ...] = tuple(int(s) for s in shape_a)
        self.shape_b: Tuple[int, ...] = tuple(int(s) for s in shape_b)
        message = f"{op}: shape mismatch {self.shape_a} vs {self.shape_b}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class DegenerateFeatureError(FGUAPError, ValueError):
    """A cosine similarity was requested for a zero-norm vector."""


class NonFiniteError(FGUAPError, FloatingPointError):
    """An operation produced NaN or Inf."""

    def __init__(self, op: str):
        self.op = op
        super().__init__(f"{op}: produced non-finite values")


class UndefinedMetricError(FGUAPError, ValueError):
    """A collapse metric cannot be computed for the given grouping."""


class TrainingDivergedError(FGUAPError, RuntimeError):
    """Training loss became non-finite."""


class AttackDivergedError(FGUAPError, RuntimeError):
    """Attack loss became non-finite."""


class ConfigError(FGUAPError, ValueError):
    """Experiment configuration document is invalid."""


class ContainerFormatError(FGUAPError, ValueError):
    """Base class for binary container (dataset/checkpoint/perturbation) errors."""


class NotAContainerError(ContainerFormatError):
    """Magic bytes do not match the expected container kind."""


class MalformedHeaderError(ContainerFormatError):
    """Header fields or the metadata document could not be parsed."""


class TruncatedPayloadError(ContainerFormatError):
    """File ended before the declared payload was read."""


class ChecksumMismatchError(ContainerFormatError):
    """Stored CRC32 does not match the payload."""


class VersionMismatchError(ContainerFormatError):
    """Container declares an unsupported format version."""


class TensorCountMismatchError(ContainerFormatError):
    """Checkpoint holds a different number of tensors than the architecture needs."""


class ArchitectureMismatchError(ContainerFormatError):
    """Checkpoint architecture differs from the requested one."""


class BudgetViolationError(FGUAPError, ValueError):
    """A perturbation exceeds its declared L-infinity budget."""
