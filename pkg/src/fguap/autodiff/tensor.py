"""Dense float64 tensors with define-by-run reverse-mode differentiation.

A ``Tensor`` is an immutable wrapper around a read-only ``numpy`` array. When a
``Tape`` is active, every primitive whose inputs require gradients appends an
entry (inputs, output, backward rule) to it; ``Tape.gradient`` replays the
entries in reverse order. Outside a tape nothing is recorded, which is the
inference path used by evaluation code.

Broadcasting is restricted to tensor-scalar pairs: two tensor operands must
have identical shapes.
"""

import contextvars
import logging
from dataclasses import dataclass
from numbers import Real
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import NonFiniteError, ShapeMismatchError

logger = logging.getLogger(__name__)

MAX_RANK = 4

ArrayLike = Union[np.ndarray, float, int, Sequence]
Operand = Union["Tensor", float, int]
BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]

_ACTIVE_TAPE: contextvars.ContextVar[Optional["Tape"]] = contextvars.ContextVar(
    "fguap_active_tape", default=None
)


class Tensor:
    """Immutable dense tensor of 64-bit reals (rank 0-4)."""

    __slots__ = ("_data", "requires_grad")
    __array_priority__ = 1000

    def __init__(self, data: ArrayLike, requires_grad: bool = False):
        """
        Create a tensor from array-like data.

        Args:
            data: Values (copied and converted to float64)
            requires_grad: Whether operations on this tensor are recorded

        Raises:
            ValueError: If rank exceeds 4
            NonFiniteError: If any value is NaN or Inf
        """
        arr = np.array(data, dtype=np.float64)
        self._data = _freeze(arr, "tensor")
        self.requires_grad = bool(requires_grad)

    @classmethod
    def _wrap(cls, arr: np.ndarray, requires_grad: bool, op: str) -> "Tensor":
        """Wrap a freshly computed array without copying it."""
        out = cls.__new__(cls)
        out._data = _freeze(np.asarray(arr, dtype=np.float64), op)
        out.requires_grad = requires_grad
        return out

    # ------------------------------------------------------------------ #
    # Introspection                                                        #
    # ------------------------------------------------------------------ #

    @property
    def data(self) -> np.ndarray:
        """Read-only view of the underlying values."""
        return self._data

    @property
    def dims(self) -> Tuple[int, ...]:
        return self._data.shape

    shape = dims

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return int(self._data.size)

    def item(self) -> float:
        if self._data.size != 1:
            raise ValueError(f"item() needs a single-element tensor, got dims {self.dims}")
        return float(self._data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """Writable copy of the values."""
        return self._data.copy()

    def detach(self) -> "Tensor":
        """Same values, never recorded."""
        return Tensor._wrap(self._data, False, "detach")

    def __len__(self) -> int:
        if self.ndim == 0:
            raise TypeError("len() of a rank-0 tensor")
        return self.dims[0]

    def __repr__(self) -> str:
        return f"Tensor(dims={self.dims}, requires_grad={self.requires_grad})"

    # ------------------------------------------------------------------ #
    # Arithmetic                                                           #
    # ------------------------------------------------------------------ #

    def __add__(self, other: Operand) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: Operand) -> "Tensor":
        return add(self, other)

    def __sub__(self, other: Operand) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: Operand) -> "Tensor":
        return add(neg(self), other)

    def __mul__(self, other: Operand) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: Operand) -> "Tensor":
        return mul(self, other)

    def __truediv__(self, other: Operand) -> "Tensor":
        return div(self, other)

    def __rtruediv__(self, other: Operand) -> "Tensor":
        return div(_lift(other, self), self)

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __getitem__(self, index) -> "Tensor":
        return getitem(self, index)

    def reshape(self, *dims) -> "Tensor":
        if len(dims) == 1 and isinstance(dims[0], (tuple, list)):
            dims = tuple(dims[0])
        return reshape(self, dims)

    def transpose(self, axes: Optional[Sequence[int]] = None) -> "Tensor":
        return transpose(self, axes)

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return tensor_mean(self, axis=axis, keepdims=keepdims)

    def exp(self) -> "Tensor":
        return exp(self)

    def log(self) -> "Tensor":
        return log(self)


def _freeze(arr: np.ndarray, op: str) -> np.ndarray:
    if arr.ndim > MAX_RANK:
        raise ValueError(f"{op}: rank {arr.ndim} exceeds the supported maximum of {MAX_RANK}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(op)
    if arr.flags.writeable:
        if not arr.flags.owndata:
            arr = arr.copy()
        arr.setflags(write=False)
    return arr


def as_tensor(value: Union["Tensor", ArrayLike]) -> "Tensor":
    """Return ``value`` unchanged if it is a Tensor, else a constant Tensor."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _is_scalar(value) -> bool:
    return isinstance(value, Real) and not isinstance(value, bool)


def _lift(scalar: Operand, like: Tensor) -> Tensor:
    if not _is_scalar(scalar):
        raise TypeError(f"Expected a real scalar, got {type(scalar).__name__}")
    return Tensor._wrap(np.full(like.dims, float(scalar)), False, "scalar")


# ---------------------------------------------------------------------- #
# Tape                                                                     #
# ---------------------------------------------------------------------- #


@dataclass(frozen=True)
class TapeEntry:
    """One recorded primitive."""

    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


class Tape:
    """Ordered record of primitives executed while the tape is active.

    Use as a context manager::

        with Tape() as tape:
            loss = f(x)
        (grad_x,) = tape.gradient(loss, [x])

    Tapes are tracked per execution context, so independent tapes in separate
    threads do not interfere.
    """

    def __init__(self) -> None:
        self._entries: List[TapeEntry] = []
        self._token: Optional[contextvars.Token] = None

    def __enter__(self) -> "Tape":
        if self._token is not None:
            raise RuntimeError("Tape is already active")
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if self._token is not None:
            _ACTIVE_TAPE.reset(self._token)
            self._token = None

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> Tuple[TapeEntry, ...]:
        return tuple(self._entries)

    def record(self, entry: TapeEntry) -> None:
        self._entries.append(entry)

    def clear(self) -> None:
        """Drop every recorded entry."""
        self._entries.clear()

    def gradient(self, target: Tensor, sources: Sequence[Tensor]) -> List[Tensor]:
        """
        Gradients of a scalar ``target`` with respect to each of ``sources``.

        Args:
            target: Single-element tensor produced under this tape
            sources: Tensors to differentiate with respect to

        Returns:
            One constant tensor per source, shaped like the source. Sources
            that do not influence the target receive zeros.

        Raises:
            ValueError: If target is not a single element
            NonFiniteError: If a gradient contains NaN or Inf
        """
        if target.size != 1:
            raise ValueError(f"gradient target must have one element, got dims {target.dims}")

        grads: Dict[int, np.ndarray] = {id(target): np.ones(target.dims)}
        for entry in reversed(self._entries):
            upstream = grads.get(id(entry.output))
            if upstream is None:
                continue
            for inp, contribution in zip(entry.inputs, entry.backward(upstream)):
                if contribution is None or not inp.requires_grad:
                    continue
                key = id(inp)
                if key in grads:
                    grads[key] = grads[key] + contribution
                else:
                    grads[key] = contribution

        results = []
        for source in sources:
            g = grads.get(id(source))
            if g is None:
                g = np.zeros(source.dims)
            results.append(Tensor._wrap(np.array(g, dtype=np.float64), False, "gradient"))
        return results


def active_tape() -> Optional[Tape]:
    return _ACTIVE_TAPE.get()


def record(op: str, data: np.ndarray, inputs: Tuple[Tensor, ...], backward: BackwardFn) -> Tensor:
    """Wrap ``data`` as the output of primitive ``op`` and record it if needed."""
    requires_grad = any(t.requires_grad for t in inputs)
    out = Tensor._wrap(data, requires_grad, op)
    if requires_grad:
        tape = _ACTIVE_TAPE.get()
        if tape is not None:
            tape.record(TapeEntry(op, inputs, out, backward))
    return out


# ---------------------------------------------------------------------- #
# Elementwise primitives                                                   #
# ---------------------------------------------------------------------- #


def _binary_operands(op: str, a: Operand, b: Operand) -> Tuple[Tensor, Tensor]:
    if not isinstance(a, Tensor) and not isinstance(b, Tensor):
        raise TypeError(f"{op}: at least one operand must be a Tensor")
    if not isinstance(a, Tensor):
        a = _lift(a, b)
    if not isinstance(b, Tensor):
        b = _lift(b, a)
    if a.dims != b.dims:
        raise ShapeMismatchError(op, a.dims, b.dims, "broadcast is tensor-scalar only")
    return a, b


def add(a: Operand, b: Operand) -> Tensor:
    a, b = _binary_operands("add", a, b)
    return record("add", a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = _binary_operands("sub", a, b)
    return record("sub", a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = _binary_operands("mul", a, b)
    ad, bd = a.data, b.data
    return record("mul", ad * bd, (a, b), lambda g: (g * bd, g * ad))


def div(a: Operand, b: Operand) -> Tensor:
    a, b = _binary_operands("div", a, b)
    ad, bd = a.data, b.data
    out = ad / bd
    return record("div", out, (a, b), lambda g: (g / bd, -g * out / bd))


def neg(a: Tensor) -> Tensor:
    return record("neg", -a.data, (a,), lambda g: (-g,))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return record("exp", out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    ad = a.data
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(ad)
    return record("log", out, (a,), lambda g: (g / ad,))


# ---------------------------------------------------------------------- #
# Shape primitives                                                         #
# ---------------------------------------------------------------------- #


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product over the last two axes.

    Leading (batch) axes must be identical; rank-1 operands are not promoted.

    Raises:
        ShapeMismatchError: If inner or batch dimensions disagree
    """
    if a.ndim < 2 or b.ndim < 2 or a.ndim != b.ndim:
        raise ShapeMismatchError("matmul", a.dims, b.dims, "operands must share rank >= 2")
    if a.dims[:-2] != b.dims[:-2] or a.dims[-1] != b.dims[-2]:
        raise ShapeMismatchError("matmul", a.dims, b.dims)
    ad, bd = a.data, b.data

    def backward(g: np.ndarray):
        return np.matmul(g, np.swapaxes(bd, -1, -2)), np.matmul(np.swapaxes(ad, -1, -2), g)

    return record("matmul", np.matmul(ad, bd), (a, b), backward)


def reshape(a: Tensor, dims: Sequence[int]) -> Tensor:
    dims = tuple(int(d) for d in dims)
    try:
        out = a.data.reshape(dims)
    except ValueError:
        raise ShapeMismatchError("reshape", a.dims, dims) from None
    original = a.dims
    return record("reshape", out, (a,), lambda g: (g.reshape(original),))


def transpose(a: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    """Permute axes; with no ``axes`` the order is reversed."""
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    axes = tuple(int(x) for x in axes)
    if sorted(axes) != list(range(a.ndim)):
        raise ValueError(f"transpose: {axes} is not a permutation of {a.ndim} axes")
    inverse = tuple(int(i) for i in np.argsort(axes))
    return record(
        "transpose", np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),)
    )


def getitem(a: Tensor, index) -> Tensor:
    out = a.data[index]
    dims = a.dims

    def backward(g: np.ndarray):
        full = np.zeros(dims)
        np.add.at(full, index, g)
        return (full,)

    return record("getitem", np.array(out, dtype=np.float64), (a,), backward)


def tensor_sum(a: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    dims = a.dims
    out = np.sum(a.data, axis=axis, keepdims=keepdims)

    def backward(g: np.ndarray):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, dims).copy(),)

    return record("sum", out, (a,), backward)


def tensor_mean(a: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    count = a.size if axis is None else a.dims[axis]
    dims = a.dims
    out = np.mean(a.data, axis=axis, keepdims=keepdims)

    def backward(g: np.ndarray):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, dims).copy(),)

    return record("mean", out, (a,), backward)
