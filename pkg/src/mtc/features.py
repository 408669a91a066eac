"""Session-to-tensor extractors and the FTNS tensor interchange format."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .capture import Session
from .capture.flows import DIR_FWD
from .errors import CorruptTensorFile, InsufficientPayload, ShapeMismatch

RAW784 = "RAW784"
IMG28 = "IMG28"
DEEPMAL = "DEEPMAL"
PKTSEQ = "PKTSEQ"
STATS = "STATS"

RAW_LEN = 784
STATS_LEN = 24

DEEPMAL_DEFAULT_M = 2
DEEPMAL_DEFAULT_N = 100
PKTSEQ_DEFAULT_P = 32

_FTNS_MAGIC = b"FTNS"


@dataclass
class FeatureTensor:
    dims: Tuple[int, ...]
    values: np.ndarray  # float32, shaped as dims
    repr_tag: str

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


def payload_stream(session: Session) -> bytes:
    """Payload bytes of both directions concatenated in packet-time order."""
    return b"".join(p.payload for p in session.packets)


def extract_raw784(session: Session) -> FeatureTensor:
    """First 784 session payload bytes as a [0,1]-scaled vector."""
    data = payload_stream(session)
    if len(data) < RAW_LEN:
        raise InsufficientPayload(
            f"session has {len(data)} payload bytes, need {RAW_LEN}"
        )
    vec = np.frombuffer(data[:RAW_LEN], dtype=np.uint8).astype(np.float32) / 255.0
    return FeatureTensor((RAW_LEN,), vec, RAW784)


def extract_img28(session: Session) -> FeatureTensor:
    """The RAW784 vector reshaped row-major into a 28x28 image."""
    raw = extract_raw784(session)
    return FeatureTensor((28, 28), raw.values.reshape(28, 28), IMG28)


def extract_deepmal(
    session: Session, m: int = DEEPMAL_DEFAULT_M, n: int = DEEPMAL_DEFAULT_N
) -> FeatureTensor:
    """First n payload bytes of each of the first m packets, zero-padded."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be >= 1")
    out = np.zeros((m, n), dtype=np.float32)
    for row, pkt in enumerate(session.packets[:m]):
        chunk = pkt.payload[:n]
        if chunk:
            out[row, : len(chunk)] = (
                np.frombuffer(chunk, dtype=np.uint8).astype(np.float32) / 255.0
            )
    return FeatureTensor((m, n), out, DEEPMAL)


def extract_pktseq(session: Session, p: int = PKTSEQ_DEFAULT_P) -> FeatureTensor:
    """Per-packet (payload length, direction, inter-arrival seconds) rows."""
    if p < 1:
        raise ValueError("P must be >= 1")
    out = np.zeros((p, 3), dtype=np.float32)
    prev_ts = None
    for row, pkt in enumerate(session.packets[:p]):
        gap = 0.0 if prev_ts is None else (pkt.timestamp - prev_ts) / 1e6
        prev_ts = pkt.timestamp
        out[row, 0] = len(pkt.payload)
        out[row, 1] = 1.0 if session.direction(pkt) == DIR_FWD else -1.0
        out[row, 2] = gap
    return FeatureTensor((p, 3), out, PKTSEQ)


def _byte_entropy(payload: bytes) -> float:
    if not payload:
        return 0.0
    counts = np.bincount(np.frombuffer(payload, dtype=np.uint8), minlength=256)
    probs = counts[counts > 0] / len(payload)
    return float(-np.sum(probs * np.log2(probs)))


def _dir_block(sizes: List[int], times: List[int]) -> List[float]:
    if not sizes:
        return [0.0] * 8
    arr = np.asarray(sizes, dtype=np.float64)
    gaps = np.diff(np.asarray(times, dtype=np.float64)) / 1e6 if len(times) > 1 else None
    return [
        float(len(sizes)),
        float(arr.sum()),
        float(arr.min()),
        float(arr.mean()),
        float(arr.max()),
        float(arr.std()) if len(arr) > 1 else 0.0,
        float(gaps.mean()) if gaps is not None else 0.0,
        float(gaps.std()) if gaps is not None and len(gaps) > 1 else 0.0,
    ]


def extract_stats(session: Session) -> FeatureTensor:
    """Fixed 24-slot statistical summary of the session."""
    from .capture.pcapfile import FIN, RST, SYN, TCP

    fwd_sizes: List[int] = []
    fwd_times: List[int] = []
    bwd_sizes: List[int] = []
    bwd_times: List[int] = []
    syn = fin_rst = 0
    for pkt in session.packets:
        if session.direction(pkt) == DIR_FWD:
            fwd_sizes.append(len(pkt.payload))
            fwd_times.append(pkt.timestamp)
        else:
            bwd_sizes.append(len(pkt.payload))
            bwd_times.append(pkt.timestamp)
        if pkt.transport == TCP:
            if pkt.tcp_flags & SYN:
                syn += 1
            if pkt.tcp_flags & (FIN | RST):
                fin_rst += 1
    n_pkts = len(session.packets)
    duration = session.duration_seconds
    total_bytes = float(sum(fwd_sizes) + sum(bwd_sizes))
    entropies = [_byte_entropy(p.payload) for p in session.packets]
    whole = [
        duration,
        n_pkts / duration if duration > 0 else 0.0,
        total_bytes / duration if duration > 0 else 0.0,
        len(fwd_sizes) / n_pkts,
        float(syn),
        float(fin_rst),
        float(len(set(fwd_sizes) | set(bwd_sizes))),
        float(np.mean(entropies)) if entropies else 0.0,
    ]
    vec = np.asarray(
        _dir_block(fwd_sizes, fwd_times) + _dir_block(bwd_sizes, bwd_times) + whole,
        dtype=np.float32,
    )
    return FeatureTensor((STATS_LEN,), vec, STATS)


EXTRACTORS = {
    "raw784": extract_raw784,
    "img28": extract_img28,
    "deepmal": extract_deepmal,
    "pktseq": extract_pktseq,
    "stats": extract_stats,
}


def extract(session: Session, repr_name: str, **kwargs) -> FeatureTensor:
    try:
        fn = EXTRACTORS[repr_name]
    except KeyError:
        raise ValueError(f"unknown representation {repr_name!r}") from None
    return fn(session, **kwargs)


# ---------------------------------------------------------------------------
# FTNS tensor file: magic, version u16, dtype u8 (1 = f32), rank u8,
# dims u32 each, count u64, then count * prod(dims) little-endian floats.


def write_tensor_file(
    tensors: Sequence[FeatureTensor],
    labels: Sequence[Tuple[str, str, str]],
    tensor_path: str,
    label_path: str | None = None,
) -> None:
    """Write tensors plus a companion "session_id,label,family" label file."""
    if len(labels) != len(tensors):
        raise ShapeMismatch("label count differs from tensor count")
    if tensors:
        dims, tag = tensors[0].dims, tensors[0].repr_tag
        for t in tensors:
            if t.dims != dims or t.repr_tag != tag:
                raise ShapeMismatch(
                    f"mixed tensors in one file: {t.dims}/{t.repr_tag} vs {dims}/{tag}"
                )
    else:
        dims = (0,)
    with open(tensor_path, "wb") as fh:
        fh.write(_FTNS_MAGIC)
        fh.write(struct.pack("<HBB", 1, 1, len(dims)))
        fh.write(struct.pack("<%dI" % len(dims), *dims))
        fh.write(struct.pack("<Q", len(tensors)))
        for t in tensors:
            fh.write(np.ascontiguousarray(t.values, dtype="<f4").tobytes())
    if label_path is not None:
        with open(label_path, "w", encoding="utf-8") as fh:
            for sid, label, family in labels:
                fh.write(f"{sid},{label},{family}\n")


def read_tensor_file(path: str, repr_tag: str = "") -> List[FeatureTensor]:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 8 or data[:4] != _FTNS_MAGIC:
        raise CorruptTensorFile("bad tensor-file magic")
    version, dtype, rank = struct.unpack("<HBB", data[4:8])
    if version != 1 or dtype != 1:
        raise CorruptTensorFile(f"unsupported version/dtype {version}/{dtype}")
    off = 8
    if len(data) < off + 4 * rank + 8:
        raise CorruptTensorFile("truncated header")
    dims = struct.unpack("<%dI" % rank, data[off : off + 4 * rank])
    off += 4 * rank
    (count,) = struct.unpack("<Q", data[off : off + 8])
    off += 8
    per = int(np.prod(dims)) if count else 0
    expect = off + 4 * per * count
    if len(data) != expect:
        raise CorruptTensorFile(
            f"payload size mismatch: {len(data)} bytes, expected {expect}"
        )
    out = []
    for _ in range(count):
        arr = np.frombuffer(data[off : off + 4 * per], dtype="<f4").reshape(dims)
        off += 4 * per
        out.append(FeatureTensor(tuple(dims), arr.copy(), repr_tag))
    return out


def read_label_file(path: str) -> List[Tuple[str, str, str]]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            sid, label, family = line.split(",", 2)
            out.append((sid, label, family))
    return out
