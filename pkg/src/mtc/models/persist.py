"""Versioned binary dumps of fitted models (magic "MTCM")."""

from __future__ import annotations

import struct
import zlib
from typing import Union

import numpy as np

from ..errors import CorruptModelFile
from .forest import ForestModel
from .knn import KnnModel
from .tree import Leaf, Split, TreeNode

_MAGIC = b"MTCM"
_VERSION = 1

_KIND_TREE = 1
_KIND_FOREST = 2
_KIND_KNN = 3

Model = Union[TreeNode, ForestModel, KnnModel]


def _pack_tree(node: TreeNode) -> bytes:
    if isinstance(node, Leaf):
        return (
            struct.pack("<BI", 0, len(node.probs))
            + struct.pack("<%dd" % len(node.probs), *node.probs)
        )
    return (
        struct.pack("<BId", 1, node.feature, node.threshold)
        + _pack_tree(node.left)
        + _pack_tree(node.right)
    )


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def unpack(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.off + size > len(self.data):
            raise CorruptModelFile("model dump truncated")
        vals = struct.unpack(fmt, self.data[self.off : self.off + size])
        self.off += size
        return vals

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise CorruptModelFile("model dump truncated")
        b = self.data[self.off : self.off + n]
        self.off += n
        return b


def _unpack_tree(r: _Reader) -> TreeNode:
    (tag,) = r.unpack("<B")
    if tag == 0:
        (n,) = r.unpack("<I")
        probs = r.unpack("<%dd" % n)
        return Leaf(tuple(probs))
    if tag == 1:
        feature, threshold = r.unpack("<Id")
        left = _unpack_tree(r)
        right = _unpack_tree(r)
        return Split(int(feature), float(threshold), left, right)
    raise CorruptModelFile(f"bad tree node tag {tag}")


def save_model(model: Model, path: str) -> None:
    if isinstance(model, (Leaf, Split)):
        body = struct.pack("<B", _KIND_TREE) + _pack_tree(model)
    elif isinstance(model, ForestModel):
        body = struct.pack(
            "<BBIIqI",
            _KIND_FOREST,
            1 if model.mode == "extra" else 0,
            model.n_classes,
            model.feature_subsample or 0,
            model.seed,
            model.n_trees,
        )
        body += b"".join(_pack_tree(t) for t in model.trees)
    elif isinstance(model, KnnModel):
        n, d = model.X.shape
        body = struct.pack("<BIIII", _KIND_KNN, model.k, model.n_classes, n, d)
        body += np.ascontiguousarray(model.X, dtype="<f8").tobytes()
        body += np.ascontiguousarray(model.y, dtype="<i8").tobytes()
    else:
        raise TypeError(f"cannot persist {type(model).__name__}")
    blob = _MAGIC + struct.pack("<H", _VERSION) + body
    with open(path, "wb") as fh:
        fh.write(blob)
        fh.write(struct.pack("<I", zlib.crc32(blob)))


def load_model(path: str) -> Model:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 11 or data[:4] != _MAGIC:
        raise CorruptModelFile("bad model magic")
    blob, crc = data[:-4], struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(blob) != crc:
        raise CorruptModelFile("checksum mismatch")
    r = _Reader(blob)
    r.take(4)
    (version,) = r.unpack("<H")
    if version != _VERSION:
        raise CorruptModelFile(f"unsupported model version {version}")
    (kind,) = r.unpack("<B")
    if kind == _KIND_TREE:
        return _unpack_tree(r)
    if kind == _KIND_FOREST:
        mode_b, n_classes, fs, seed, n_trees = r.unpack("<BIIqI")
        trees = [_unpack_tree(r) for _ in range(n_trees)]
        return ForestModel(
            trees=trees,
            n_classes=n_classes,
            mode="extra" if mode_b else "rf",
            feature_subsample=fs or None,
            seed=seed,
        )
    if kind == _KIND_KNN:
        k, n_classes, n, d = r.unpack("<IIII")
        X = np.frombuffer(r.take(8 * n * d), dtype="<f8").reshape(n, d).copy()
        y = np.frombuffer(r.take(8 * n), dtype="<i8").copy()
        return KnnModel(X=X, y=y, k=k, n_classes=n_classes)
    raise CorruptModelFile(f"bad model kind {kind}")
