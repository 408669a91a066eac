"""Reader/writer for the "FTNS" tensor interchange files.

Layout: magic "FTNS", version u16 = 1, dtype u8 = 1 (f32), rank u8,
one u32 per dimension, count u64, then count x prod(dims) little-endian
floats. The companion label file holds UTF-8 "session_id,label,family"
lines.
"""

from __future__ import annotations

import struct
from typing import List, Sequence, Tuple

import numpy as np

from .errors import CorruptTensorFile, ShapeMismatch

_MAGIC = b"FTNS"
_VERSION = 1
_DTYPE_F32 = 1


def read_tensor_file(path: str) -> np.ndarray:
    """All tensors as one float32 array of shape (count, *dims)."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise CorruptTensorFile(f"cannot read {path}: {exc}") from exc
    if len(data) < 8 or data[:4] != _MAGIC:
        raise CorruptTensorFile(f"{path}: bad magic")
    version, dtype, rank = struct.unpack("<HBB", data[4:8])
    if version != _VERSION or dtype != _DTYPE_F32:
        raise CorruptTensorFile(f"{path}: unsupported version/dtype {version}/{dtype}")
    off = 8
    if len(data) < off + 4 * rank + 8:
        raise CorruptTensorFile(f"{path}: truncated header")
    dims = struct.unpack("<%dI" % rank, data[off : off + 4 * rank])
    off += 4 * rank
    count = struct.unpack("<Q", data[off : off + 8])[0]
    off += 8
    per = int(np.prod(dims, dtype=np.int64)) if rank else 1
    want = count * per * 4
    if len(data) - off != want:
        raise CorruptTensorFile(
            f"{path}: expected {want} payload bytes, found {len(data) - off}"
        )
    flat = np.frombuffer(data, dtype="<f4", offset=off, count=count * per)
    return flat.reshape((count,) + tuple(dims)).copy()


def write_tensor_file(values: np.ndarray, path: str) -> None:
    """Write an array of shape (count, *dims) in the interchange layout."""
    values = np.ascontiguousarray(values, dtype="<f4")
    if values.ndim < 2:
        raise ShapeMismatch("expected at least (count, dim) array")
    dims = values.shape[1:]
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HBB", _VERSION, _DTYPE_F32, len(dims)))
        fh.write(struct.pack("<%dI" % len(dims), *dims))
        fh.write(struct.pack("<Q", values.shape[0]))
        fh.write(values.tobytes())


def read_label_file(path: str) -> List[Tuple[str, str, str]]:
    rows: List[Tuple[str, str, str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            sid, label, family = line.split(",", 2)
            rows.append((sid, label, family))
    return rows


def write_label_file(rows: Sequence[Tuple[str, str, str]], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sid, label, family in rows:
            fh.write(f"{sid},{label},{family}\n")
