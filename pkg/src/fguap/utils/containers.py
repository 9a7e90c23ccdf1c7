"""Binary container helpers shared by the dataset, checkpoint and perturbation files.

Layout of every container::

    magic (8 ASCII bytes) | payload | CRC32(payload) as little-endian u32

The payload is built from little-endian u16/u32 integers, 64-bit reals,
length-prefixed UTF-8 strings and key:value metadata documents. Files are
written atomically (temporary file, then rename) so a partially written
container is never visible under its final name.
"""

import logging
import struct
import zlib
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional, Tuple, Union

import numpy as np

from ..exceptions import (
    ChecksumMismatchError,
    ContainerFormatError,
    MalformedHeaderError,
    NotAContainerError,
    TruncatedPayloadError,
)

logger = logging.getLogger(__name__)

MAGIC_SIZE = 8
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")


def render_document(fields: Mapping[str, object]) -> str:
    """Render a mapping as ``key:value`` lines (insertion order)."""
    lines = []
    for key, value in fields.items():
        key = str(key)
        text = str(value)
        if not key or ":" in key or "\n" in key or "\n" in text:
            raise ValueError(f"Cannot encode metadata entry {key!r}")
        lines.append(f"{key}:{text}")
    return "\n".join(lines)


def parse_document(text: str) -> Dict[str, str]:
    """Parse ``key:value`` lines; blank lines are ignored."""
    fields: Dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition(":")
        if not sep or not key:
            raise MalformedHeaderError(f"metadata line {number} is not key:value: {line!r}")
        fields[key] = value
    return fields


class ContainerWriter:
    """Accumulates a container payload."""

    def __init__(self, magic: bytes):
        if len(magic) != MAGIC_SIZE:
            raise ValueError(f"magic must be {MAGIC_SIZE} bytes, got {magic!r}")
        self.magic = magic
        self._buf = bytearray()

    def u32(self, value: int) -> "ContainerWriter":
        self._buf += _U32.pack(int(value))
        return self

    def u16_array(self, values: Iterable[int]) -> "ContainerWriter":
        arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values)
        if arr.size and (arr.min() < 0 or arr.max() > 0xFFFF):
            raise ValueError("u16 values must lie in [0, 65535]")
        self._buf += arr.astype("<u2").tobytes()
        return self

    def f64_array(self, values: np.ndarray) -> "ContainerWriter":
        self._buf += np.ascontiguousarray(values, dtype="<f8").tobytes()
        return self

    def text(self, value: str) -> "ContainerWriter":
        raw = value.encode("utf-8")
        self.u32(len(raw))
        self._buf += raw
        return self

    def document(self, fields: Mapping[str, object]) -> "ContainerWriter":
        return self.text(render_document(fields))

    def tensor(self, name: str, values: np.ndarray) -> "ContainerWriter":
        """Named tensor: name, rank, dims as u32, then row-major reals."""
        values = np.asarray(values, dtype=np.float64)
        self.text(name)
        self.u32(values.ndim)
        for dim in values.shape:
            self.u32(dim)
        return self.f64_array(values)

    def to_bytes(self) -> bytes:
        payload = bytes(self._buf)
        return self.magic + payload + _U32.pack(zlib.crc32(payload) & 0xFFFFFFFF)


class ContainerReader:
    """
    Sequential reader over a container.

    The CRC32 trailer is checked against the payload on construction. Reads
    past the end raise ``TruncatedPayloadError``; anything that cannot be
    interpreted raises ``ChecksumMismatchError`` when the checksum already
    failed and ``MalformedHeaderError`` otherwise.
    """

    def __init__(self, raw: bytes, magic: bytes, kind: str):
        if len(raw) < MAGIC_SIZE or raw[:MAGIC_SIZE] != magic:
            raise NotAContainerError(f"not a {kind} file")
        self.kind = kind
        self._raw = raw
        self._pos = MAGIC_SIZE
        self._stored_crc: Optional[int] = None
        self._actual_crc: Optional[int] = None
        if len(raw) >= MAGIC_SIZE + _U32.size:
            self._stored_crc = _U32.unpack(raw[-_U32.size :])[0]
            self._actual_crc = zlib.crc32(raw[MAGIC_SIZE : -_U32.size]) & 0xFFFFFFFF

    @property
    def intact(self) -> bool:
        """Whether the trailing CRC32 matches the payload."""
        return self._stored_crc is not None and self._stored_crc == self._actual_crc

    def malformed(self, message: str) -> ContainerFormatError:
        """Error for contents that cannot be interpreted."""
        if not self.intact and self._stored_crc is not None:
            return ChecksumMismatchError(f"checksum mismatch in {self.kind} file ({message})")
        return MalformedHeaderError(message)

    def _take(self, count: int) -> bytes:
        end = self._pos + count
        if count < 0 or end > len(self._raw):
            raise TruncatedPayloadError(f"truncated payload in {self.kind} file")
        chunk = self._raw[self._pos : end]
        self._pos = end
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self._take(4))[0]

    def u16_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self._take(2 * count), dtype="<u2").astype(np.int64)

    def f64_array(self, dims: Tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(dims)) if dims else 1
        arr = np.frombuffer(self._take(8 * count), dtype="<f8").astype(np.float64)
        return arr.reshape(dims)

    def text(self) -> str:
        raw = self._take(self.u32())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise self.malformed(f"invalid UTF-8 in {self.kind} file: {e}") from e

    def document(self) -> Dict[str, str]:
        try:
            return parse_document(self.text())
        except MalformedHeaderError as e:
            raise self.malformed(str(e)) from e

    def tensor(self) -> Tuple[str, np.ndarray]:
        name = self.text()
        rank = self.u32()
        if rank > 4:
            raise self.malformed(f"tensor {name!r} declares rank {rank}")
        dims = tuple(self.u32() for _ in range(rank))
        return name, self.f64_array(dims)

    def finish(self) -> None:
        """Verify that only the CRC32 trailer follows, and that it matches."""
        payload_end = self._pos
        self.u32()
        if self._pos != len(self._raw):
            raise MalformedHeaderError(
                f"{len(self._raw) - self._pos} unexpected trailing bytes in {self.kind} file"
            )
        if not self.intact:
            actual = zlib.crc32(self._raw[MAGIC_SIZE:payload_end]) & 0xFFFFFFFF
            raise ChecksumMismatchError(
                f"checksum mismatch in {self.kind} file: stored {self._stored_crc:08x}, computed {actual:08x}"
            )


def write_atomic(path: Union[str, Path], data: bytes) -> Path:
    """Write ``data`` to ``path`` through a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)
    logger.debug(f"Wrote {len(data)} bytes to {path}")
    return path


def write_text_atomic(path: Union[str, Path], text: str) -> Path:
    return write_atomic(path, text.encode("utf-8"))


def open_container(path: Union[str, Path], magic: bytes, kind: str) -> ContainerReader:
    """Read a whole container file and return a reader positioned after the magic."""
    return ContainerReader(Path(path).read_bytes(), magic, kind)
