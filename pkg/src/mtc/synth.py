"""Planted-signal synthetic capture corpus.

Class identity is encoded in payload byte patterns so desk-scale runs
have a known ground truth:

  benign  - uniformly random payload bytes
  alpha   - own pattern at bytes [300:340], marker at [80:88]
  beta    - shared pattern at bytes [200:240], marker at [96:104]
  gamma   - same shared pattern as beta, marker at [112:120]

Gamma therefore transfers to a model trained on beta (the shared-pattern
zero-day case), while alpha is pattern-disjoint from beta/gamma and looks
benign to a model that never saw it.
"""

from __future__ import annotations

import json
import os
from typing import List, Tuple

import numpy as np

from .capture.craft import tcp_frame, udp_frame, write_pcap
from .capture.pcapfile import ACK, FIN, PSH, SYN

FAMILIES = ("alpha", "beta", "gamma")

SHARED_PATTERN = bytes(range(160, 200))  # beta + gamma, bytes [200:240]
ALPHA_PATTERN = bytes(range(10, 50))  # alpha only, bytes [300:340]
MARKERS = {
    "alpha": (80, b"\x11\x22\x33\x44" * 2),
    "beta": (96, b"\x55\x66\x77\x88" * 2),
    "gamma": (112, b"\x99\xaa\xbb\xcc" * 2),
}

BLOCK_LEN = 784


def _payload_block(cls: str, rng: np.random.Generator) -> bytes:
    block = bytearray(rng.bytes(BLOCK_LEN))
    if cls in ("beta", "gamma"):
        block[200:240] = SHARED_PATTERN
    elif cls == "alpha":
        block[300:340] = ALPHA_PATTERN
    if cls in MARKERS:
        off, sig = MARKERS[cls]
        block[off : off + len(sig)] = sig
    return bytes(block)


def _session_frames(
    idx: int, cls_id: int, payload: bytes, reply: bytes, base_ts: int
) -> List[Tuple[int, bytes]]:
    client = f"10.{(idx >> 8) & 255}.{idx & 255}.{cls_id + 1}"
    server = f"203.0.113.{cls_id + 1}"
    sport = 40000 + (idx % 20000)
    t = base_ts
    frames = [
        (t, tcp_frame(client, sport, server, 443, SYN)),
        (t + 1000, tcp_frame(server, 443, client, sport, SYN | ACK)),
        (t + 2000, tcp_frame(client, sport, server, 443, ACK)),
        (t + 3000, tcp_frame(client, sport, server, 443, PSH | ACK, payload)),
        (t + 4000, tcp_frame(server, 443, client, sport, PSH | ACK, reply)),
        (t + 5000, tcp_frame(client, sport, server, 443, FIN | ACK)),
        (t + 6000, tcp_frame(server, 443, client, sport, FIN | ACK)),
        (t + 7000, tcp_frame(client, sport, server, 443, ACK)),
    ]
    return frames


def _class_pcap(
    path: str,
    cls: str,
    cls_id: int,
    n_sessions: int,
    rng: np.random.Generator,
    extra_noise: int = 0,
    extra_short: int = 0,
) -> None:
    frames: List[Tuple[int, bytes]] = []
    base = 1_600_000_000_000_000  # fixed epoch anchor, microseconds
    for i in range(n_sessions):
        block = _payload_block(cls, rng)
        payload = block + rng.bytes(16)
        reply = rng.bytes(120)
        frames += _session_frames(i, cls_id, payload, reply, base + i * 20_000)
    ts = base + n_sessions * 20_000
    for i in range(extra_noise):  # DNS sessions the noise filter must drop
        client = f"10.200.{i & 255}.{cls_id + 1}"
        frames.append((ts, udp_frame(client, 50000 + i, "8.8.8.8", 53, rng.bytes(900))))
        ts += 10_000
    for i in range(extra_short):  # below the payload threshold
        client = f"10.201.{i & 255}.{cls_id + 1}"
        frames += _session_frames(100_000 + i, cls_id, rng.bytes(64), b"", ts)
        ts += 20_000
    write_pcap(path, frames)


def generate_planted_corpus(
    out_dir: str,
    sessions_per_class: int = 400,
    seed: int = 7,
    noise_sessions: int = 20,
    short_sessions: int = 20,
) -> str:
    """Write benign + three family pcaps and a manifest; returns its path."""
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    classes = [("benign", "benign", "benign")] + [
        (fam, "malware", fam) for fam in FAMILIES
    ]
    for cls_id, (name, label, family) in enumerate(classes):
        rng = np.random.default_rng([seed, cls_id])
        path = os.path.join(out_dir, f"{name}.pcap")
        _class_pcap(
            path,
            name if name != "benign" else "benign",
            cls_id,
            sessions_per_class,
            rng,
            extra_noise=noise_sessions if name == "benign" else 0,
            extra_short=short_sessions if name == "benign" else 0,
        )
        entries.append(
            {"path": path, "label": label, "family": family, "source_dataset": "synth"}
        )
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump({"dataset_name": "planted", "entries": entries}, fh, indent=2)
    return manifest_path
