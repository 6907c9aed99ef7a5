"""Snapshot matrix file format and instrumented streaming readers.

A snapshot file stores an m x n matrix whose rows are flattened solution
states. Layout (all integers little-endian):

    [magic "LRSM"][u16 version][u8 scalar_kind][u8 flags][u64 m][u64 n][payload]

scalar_kind: 0 = float64, 1 = float32. flags bit 0 set = row-major payload.
Payload length must equal m * n * scalar_size.

Readers are instrumented: they hand out row blocks strictly in order and
count completed passes, so pass-efficiency claims of the algorithms built
on top can be audited rather than trusted.
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FormatError, PassAuditError, StreamPoisonedError

MAGIC = b"LRSM"
VERSION = 1
_HEADER = struct.Struct("<4sHBBQQ")
HEADER_BYTES = _HEADER.size

_SCALAR_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<f4")}
_SCALAR_KINDS = {np.dtype("<f8"): 0, np.dtype("<f4"): 1}
ROW_MAJOR_FLAG = 0x01


@dataclass(frozen=True)
class SnapshotHeader:
    m: int
    n: int
    scalar_kind: int
    row_major: bool = True

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise FormatError(f"header requires m, n >= 1, got m={self.m}, n={self.n}")
        if self.scalar_kind not in _SCALAR_DTYPES:
            raise FormatError(f"unsupported scalar kind {self.scalar_kind}")
        if not self.row_major:
            raise FormatError("only row-major payloads are supported")

    @property
    def dtype(self) -> np.dtype:
        return _SCALAR_DTYPES[self.scalar_kind]

    @property
    def payload_bytes(self) -> int:
        return self.m * self.n * self.dtype.itemsize

    def pack(self) -> bytes:
        flags = ROW_MAJOR_FLAG if self.row_major else 0
        return _HEADER.pack(MAGIC, VERSION, self.scalar_kind, flags, self.m, self.n)


def _parse_header(raw: bytes) -> SnapshotHeader:
    if len(raw) < HEADER_BYTES:
        raise FormatError("file too short to hold a snapshot header")
    magic, version, scalar_kind, flags, m, n = _HEADER.unpack(raw[:HEADER_BYTES])
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    return SnapshotHeader(m=m, n=n, scalar_kind=scalar_kind,
                          row_major=bool(flags & ROW_MAJOR_FLAG))


class SnapshotStream:
    """Ordered row-block reader with pass accounting.

    Rows are returned strictly in order within a pass. The pass counter
    increments exactly when all m rows have been read since the last
    rewind; rewinding mid-pass is rejected so pass audits stay meaningful.
    Subclasses provide ``_read_rows``.
    """

    def __init__(self, m: int, n: int):
        self.m = m
        self.n = n
        self.cursor = 0
        self.passes_completed = 0
        self.rows_read_this_pass = 0
        self._poisoned = False

    def _read_rows(self, start: int, count: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.n)

    @property
    def at_end_of_pass(self) -> bool:
        return self.cursor == self.m

    def next_block(self, max_rows: int) -> np.ndarray | None:
        """Return the next block of <= max_rows rows, or None at end of pass."""
        if self._poisoned:
            raise StreamPoisonedError("stream poisoned by earlier I/O failure")
        if max_rows < 1:
            raise ConfigError("max_rows must be >= 1")
        if self.cursor == self.m:
            return None
        count = min(max_rows, self.m - self.cursor)
        try:
            block = self._read_rows(self.cursor, count)
        except (OSError, ValueError) as exc:
            self._poisoned = True
            raise StreamPoisonedError(f"I/O failure mid-pass: {exc}") from exc
        self.cursor += count
        self.rows_read_this_pass += count
        if self.cursor == self.m:
            self.passes_completed += 1
        return block

    def blocks(self, max_rows: int):
        """Yield blocks until the current pass completes."""
        while True:
            block = self.next_block(max_rows)
            if block is None:
                return
            yield block

    def rewind(self) -> None:
        """Reset to row 0 after a completed pass; the pass counter is kept."""
        if self._poisoned:
            raise StreamPoisonedError("stream poisoned by earlier I/O failure")
        if self.passes_completed == 0 or self.cursor != self.m:
            raise PassAuditError(
                f"rewind requires a completed pass (cursor at row {self.cursor} of {self.m})"
            )
        self.cursor = 0
        self.rows_read_this_pass = 0

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


class FileSnapshotStream(SnapshotStream):
    """Stream over an on-disk snapshot file."""

    def __init__(self, path, fh: io.BufferedReader, header: SnapshotHeader):
        super().__init__(header.m, header.n)
        self.path = os.fspath(path)
        self.header = header
        self._fh = fh
        self._row_bytes = header.n * header.dtype.itemsize

    def _read_rows(self, start: int, count: int) -> np.ndarray:
        self._fh.seek(HEADER_BYTES + start * self._row_bytes)
        raw = self._fh.read(count * self._row_bytes)
        if len(raw) != count * self._row_bytes:
            raise OSError("short read inside payload")
        block = np.frombuffer(raw, dtype=self.header.dtype).reshape(count, self.n)
        return block.astype(np.float64, copy=False)

    def close(self) -> None:
        self._fh.close()


class ArraySnapshotStream(SnapshotStream):
    """In-memory stream with the same block and pass semantics.

    Used where the matrix is already resident (tests, benchmark harness)
    while keeping the pass audit honest.
    """

    def __init__(self, matrix: np.ndarray):
        matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ConfigError("snapshot matrix must be 2-D")
        super().__init__(matrix.shape[0], matrix.shape[1])
        self._matrix = matrix

    def _read_rows(self, start: int, count: int) -> np.ndarray:
        block = self._matrix[start:start + count]
        block.flags.writeable = False  # blocks handed out are immutable
        return block


def open_stream(path) -> FileSnapshotStream:
    """Open a snapshot file, validating header and payload length."""
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise FormatError(f"cannot open {path}: {exc}") from exc
    try:
        header = _parse_header(fh.read(HEADER_BYTES))
        size = os.fstat(fh.fileno()).st_size
        expected = HEADER_BYTES + header.payload_bytes
        if size < expected:
            raise FormatError(
                f"truncated payload: {size - HEADER_BYTES} bytes, need {header.payload_bytes}"
            )
        if size > expected:
            raise FormatError(f"trailing bytes after payload ({size - expected})")
    except Exception:
        fh.close()
        raise
    return FileSnapshotStream(path, fh, header)


def as_stream(source) -> SnapshotStream:
    """Coerce a stream, array, or path into a SnapshotStream."""
    if isinstance(source, SnapshotStream):
        return source
    if isinstance(source, np.ndarray):
        return ArraySnapshotStream(source)
    return open_stream(source)


def write_snapshots(path, matrix: np.ndarray, scalar_kind: int = 0) -> None:
    """Write a matrix in the snapshot file format."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise ConfigError("snapshot matrix must be 2-D")
    header = SnapshotHeader(m=matrix.shape[0], n=matrix.shape[1], scalar_kind=scalar_kind)
    payload = np.ascontiguousarray(matrix, dtype=header.dtype)
    with open(path, "wb") as fh:
        fh.write(header.pack())
        fh.write(payload.tobytes())


def read_matrix(stream: SnapshotStream, block_rows: int = 1024) -> np.ndarray:
    """Materialize the full matrix; costs one pass on the stream."""
    out = np.empty((stream.m, stream.n))
    row = 0
    for block in stream.blocks(block_rows):
        out[row:row + block.shape[0]] = block
        row += block.shape[0]
    return out
