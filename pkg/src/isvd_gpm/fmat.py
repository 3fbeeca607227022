"""FMAT binary tensor files.

Layout: magic ``b"FMT1"``, little-endian u32 ``ndim``, ``ndim`` little-endian
u32 dims, then the row-major little-endian float32 payload. No padding.
"""

from __future__ import annotations

import os
import struct
from typing import BinaryIO

import numpy as np

MAGIC = b"FMT1"
_U32 = struct.Struct("<I")
_DTYPE = np.dtype("<f4")


class FormatError(ValueError):
    """Malformed FMAT data; ``offset`` is where reading went wrong."""

    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} (byte offset {offset})")
        self.offset = offset


def dumps(arr) -> bytes:
    a = np.asarray(arr)
    if a.ndim == 0:
        raise ValueError("FMAT needs at least one dimension")
    parts = [MAGIC, _U32.pack(a.ndim)]
    parts += [_U32.pack(n) for n in a.shape]
    parts.append(np.ascontiguousarray(a, dtype=_DTYPE).tobytes())
    return b"".join(parts)


def loads(buf: bytes) -> np.ndarray:
    if len(buf) < 4:
        raise FormatError("truncated magic", len(buf))
    if buf[:4] != MAGIC:
        raise FormatError(f"bad magic {buf[:4]!r}", 0)
    off = 4
    if len(buf) < off + 4:
        raise FormatError("truncated ndim", len(buf))
    (ndim,) = _U32.unpack_from(buf, off)
    off += 4
    if ndim == 0:
        raise FormatError("ndim must be positive", 4)
    if len(buf) < off + 4 * ndim:
        raise FormatError(f"truncated header, expected {ndim} dims", len(buf))
    shape = tuple(_U32.unpack_from(buf, off + 4 * i)[0] for i in range(ndim))
    off += 4 * ndim
    count = int(np.prod(shape, dtype=np.int64))
    need = off + count * _DTYPE.itemsize
    if len(buf) < need:
        raise FormatError(f"truncated payload, expected {need} bytes, got {len(buf)}", len(buf))
    if len(buf) > need:
        raise FormatError(f"{len(buf) - need} trailing bytes", need)
    return np.frombuffer(buf, dtype=_DTYPE, count=count, offset=off).reshape(shape).copy()


def write(path: str | os.PathLike, arr) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(arr))


def read(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return loads(fh.read())


def write_stack(path: str | os.PathLike, layers) -> None:
    """Write several arrays back to back into one file."""
    with open(path, "wb") as fh:
        for layer in layers:
            fh.write(dumps(layer))


def read_stack(path: str | os.PathLike) -> list[np.ndarray]:
    """Read a feature stack: consecutive 3-D FMAT records ``(C, H, W)``.

    A single 4-D record ``(L, C, H, W)`` is also accepted and split along
    its first axis.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    layers = []
    off = 0
    while off < len(buf):
        arr, used = _read_record(buf, off)
        layers.append(arr)
        off += used
    if not layers:
        raise FormatError("empty feature file", 0)
    if len(layers) == 1 and layers[0].ndim == 4:
        return list(layers[0])
    for i, layer in enumerate(layers):
        if layer.ndim != 3:
            raise ValueError(f"layer {i} has {layer.ndim} dims, expected 3 (C, H, W)")
    return layers


def _read_record(buf: bytes, start: int) -> tuple[np.ndarray, int]:
    view = memoryview(buf)[start:]
    if len(view) < 8:
        raise FormatError("truncated record header", len(buf))
    if bytes(view[:4]) != MAGIC:
        raise FormatError(f"bad magic {bytes(view[:4])!r}", start)
    (ndim,) = _U32.unpack_from(view, 4)
    hdr = 8 + 4 * ndim
    if ndim == 0 or len(view) < hdr:
        raise FormatError("truncated or invalid record header", start + min(len(view), hdr))
    shape = tuple(_U32.unpack_from(view, 8 + 4 * i)[0] for i in range(ndim))
    size = hdr + int(np.prod(shape, dtype=np.int64)) * _DTYPE.itemsize
    if len(view) < size:
        raise FormatError(f"truncated payload, expected {size} bytes", len(buf))
    return loads(bytes(view[:size])), size
