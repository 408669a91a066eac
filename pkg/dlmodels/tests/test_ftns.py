import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dlmodels import ftns
from dlmodels.errors import CorruptTensorFile, ShapeMismatch


def test_roundtrip(tmp_path, rng):
    X = rng.random((5, 3, 4)).astype(np.float32)
    p = str(tmp_path / "t.ftns")
    ftns.write_tensor_file(X, p)
    np.testing.assert_array_equal(ftns.read_tensor_file(p), X)


def test_empty(tmp_path):
    p = str(tmp_path / "e.ftns")
    ftns.write_tensor_file(np.zeros((0, 7), np.float32), p)
    out = ftns.read_tensor_file(p)
    assert out.shape == (0, 7)


def test_golden_layout(tmp_path):
    p = str(tmp_path / "g.ftns")
    ftns.write_tensor_file(np.array([[[1, 2], [3, 4]]], np.float32), p)
    data = open(p, "rb").read()
    assert data[:4] == b"FTNS"
    assert struct.unpack("<HBB", data[4:8]) == (1, 1, 2)
    assert struct.unpack("<II", data[8:16]) == (2, 2)
    assert struct.unpack("<Q", data[16:24]) == (1,)
    assert struct.unpack("<4f", data[24:]) == (1.0, 2.0, 3.0, 4.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(1, 9))
def test_roundtrip_property(tmp_path_factory, seed, count, dim):
    rng = np.random.default_rng(seed)
    X = rng.random((count, dim), dtype=np.float32)
    p = str(tmp_path_factory.mktemp("ftns") / "t.ftns")
    ftns.write_tensor_file(X, p)
    np.testing.assert_array_equal(ftns.read_tensor_file(p), X)


def test_truncated(tmp_path, rng):
    p = str(tmp_path / "t.ftns")
    ftns.write_tensor_file(rng.random((3, 4)).astype(np.float32), p)
    data = open(p, "rb").read()
    open(p, "wb").write(data[:-3])
    with pytest.raises(CorruptTensorFile):
        ftns.read_tensor_file(p)


def test_bad_magic(tmp_path):
    p = str(tmp_path / "t.ftns")
    open(p, "wb").write(b"NOPE" + bytes(32))
    with pytest.raises(CorruptTensorFile):
        ftns.read_tensor_file(p)


def test_write_rejects_flat(tmp_path):
    with pytest.raises(ShapeMismatch):
        ftns.write_tensor_file(np.zeros(5, np.float32), str(tmp_path / "x"))


def test_label_file_roundtrip(tmp_path):
    rows = [("id1", "benign", "benign"), ("id2", "malware", "fam,with,commas")]
    p = str(tmp_path / "l.labels")
    ftns.write_label_file(rows, p)
    assert ftns.read_label_file(p) == rows
