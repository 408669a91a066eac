"""Corpus assembly, preprocessing filters, statistics, and the corpus store."""

from __future__ import annotations

import hashlib
import ipaddress
import json
import os
import random
import struct
import warnings
import zlib
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .capture import (
    FlowKey,
    ParseCounters,
    ParsedPacket,
    Session,
    TCP,
    UDP,
    assemble_sessions,
    parse_capture,
)
from .capture.flows import DEFAULT_TCP_IDLE_TIMEOUT, DEFAULT_UDP_IDLE_TIMEOUT
from .errors import (
    CorruptStore,
    DuplicatePath,
    EmptyCapture,
    ManifestError,
    MissingFile,
    OneClassOnly,
)

BENIGN = "benign"
MALWARE = "malware"

MIN_PAYLOAD_DEFAULT = 784
MIN_FAMILY_SESSIONS = 100

_STORE_MAGIC = b"MTC1"
_STORE_VERSION = 1


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    family: str
    source_dataset: str


@dataclass
class DatasetManifest:
    dataset_name: str
    entries: List[ManifestEntry]

    def validate(self) -> None:
        seen = set()
        for e in self.entries:
            if e.path in seen:
                raise DuplicatePath(e.path)
            seen.add(e.path)
            if e.label not in (BENIGN, MALWARE):
                raise ManifestError(f"bad label {e.label!r} for {e.path}")
            if (e.family == BENIGN) != (e.label == BENIGN):
                raise ManifestError(
                    f"family/label mismatch for {e.path}: {e.family!r}/{e.label!r}"
                )


def load_manifest(path: str) -> DatasetManifest:
    """Read a manifest from a UTF-8 JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise MissingFile(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
    try:
        entries = [
            ManifestEntry(
                path=e["path"],
                label=e["label"],
                family=e.get("family", BENIGN if e["label"] == BENIGN else ""),
                source_dataset=e.get("source_dataset", ""),
            )
            for e in doc["entries"]
        ]
        manifest = DatasetManifest(dataset_name=doc["dataset_name"], entries=entries)
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"manifest missing field: {exc}") from exc
    manifest.validate()
    return manifest


def session_digest(capture_path: str, key: FlowKey, session_index: int) -> bytes:
    """Stable 128-bit id of (capture path, flow key, ordinal)."""
    h = hashlib.blake2b(digest_size=16)
    h.update(capture_path.encode("utf-8"))
    h.update(b"\x00")
    h.update(repr((key.endpoint_a, key.endpoint_b, key.transport)).encode())
    h.update(struct.pack("<I", session_index))
    return h.digest()


@dataclass
class LabeledSession:
    session: Session
    label: str
    family: str
    source_dataset: str
    capture_path: str
    session_id: bytes

    @property
    def hex_id(self) -> str:
        return self.session_id.hex()


@dataclass
class CorpusStats:
    label_counts: Dict[str, int]
    family_counts: Dict[str, int]
    tls_share: Dict[str, float]


@dataclass
class LabeledCorpus:
    dataset_name: str
    sessions: List[LabeledSession]

    def __len__(self) -> int:
        return len(self.sessions)

    def families(self) -> List[str]:
        return sorted({s.family for s in self.sessions if s.label == MALWARE})

    def stats(self) -> CorpusStats:
        return compute_tls_share(self)


def build_corpus(
    manifest: DatasetManifest,
    tcp_idle_timeout: float = DEFAULT_TCP_IDLE_TIMEOUT,
    udp_idle_timeout: float = DEFAULT_UDP_IDLE_TIMEOUT,
) -> LabeledCorpus:
    """Parse every capture in the manifest and label its sessions."""
    manifest.validate()
    labeled: List[LabeledSession] = []
    for entry in manifest.entries:
        if not os.path.exists(entry.path):
            raise MissingFile(entry.path)
        counters = ParseCounters()
        packets = list(parse_capture(entry.path, counters))
        sessions = assemble_sessions(packets, tcp_idle_timeout, udp_idle_timeout)
        if not sessions:
            warnings.warn(f"capture {entry.path} produced no sessions", EmptyCapture)
        for sess in sessions:
            labeled.append(
                LabeledSession(
                    session=sess,
                    label=entry.label,
                    family=entry.family,
                    source_dataset=entry.source_dataset,
                    capture_path=entry.path,
                    session_id=session_digest(entry.path, sess.key, sess.session_index),
                )
            )
    return LabeledCorpus(dataset_name=manifest.dataset_name, sessions=labeled)


def filter_min_payload(
    corpus: LabeledCorpus, threshold: int = MIN_PAYLOAD_DEFAULT
) -> LabeledCorpus:
    """Drop sessions carrying fewer than ``threshold`` payload bytes."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    kept = [s for s in corpus.sessions if s.session.total_payload_bytes >= threshold]
    return LabeledCorpus(corpus.dataset_name, kept)


@dataclass(frozen=True)
class NoiseRule:
    name: str
    transport: Optional[str] = None  # None = any
    port: Optional[int] = None
    port_range: Optional[Tuple[int, int]] = None
    broadcast: bool = False

    def matches(self, sess: Session) -> bool:
        if self.transport is not None and sess.key.transport != self.transport:
            return False
        if self.broadcast:
            for addr, _ in (sess.key.endpoint_a, sess.key.endpoint_b):
                try:
                    ip = ipaddress.ip_address(addr)
                except ValueError:
                    continue
                if ip.is_multicast or (
                    ip.version == 4 and addr == "255.255.255.255"
                ):
                    return True
            return False
        ports = (sess.key.endpoint_a[1], sess.key.endpoint_b[1])
        if self.port is not None:
            return self.port in ports
        if self.port_range is not None:
            lo, hi = self.port_range
            return any(lo <= p <= hi for p in ports)
        return False


DEFAULT_DENYLIST: List[NoiseRule] = [
    NoiseRule("dns", transport=None, port=53),
    NoiseRule("snmp", transport=UDP, port=161),
    NoiseRule("snmp-trap", transport=UDP, port=162),
    NoiseRule("llmnr", transport=UDP, port=5355),
    NoiseRule("netbios", transport=UDP, port_range=(137, 138)),
    NoiseRule("ssdp", transport=UDP, port=1900),
    NoiseRule("dhcp", transport=UDP, port_range=(67, 68)),
    NoiseRule("broadcast-multicast", broadcast=True),
]


def filter_noise(
    corpus: LabeledCorpus, denylist: Optional[List[NoiseRule]] = None
) -> Tuple[LabeledCorpus, Dict[str, int]]:
    """Remove denylisted protocol/broadcast sessions; return per-rule tallies."""
    rules = DEFAULT_DENYLIST if denylist is None else denylist
    if not rules:
        raise ValueError("denylist must not be empty")
    tally = {r.name: 0 for r in rules}
    kept: List[LabeledSession] = []
    for ls in corpus.sessions:
        for rule in rules:
            if rule.matches(ls.session):
                tally[rule.name] += 1
                break
        else:
            kept.append(ls)
    return LabeledCorpus(corpus.dataset_name, kept), tally


def balance_benign_malware(corpus: LabeledCorpus, seed: int) -> LabeledCorpus:
    """Downsample the majority label to a seeded 50/50 split."""
    by_label: Dict[str, List[int]] = {BENIGN: [], MALWARE: []}
    for i, ls in enumerate(corpus.sessions):
        by_label[ls.label].append(i)
    if not by_label[BENIGN] or not by_label[MALWARE]:
        raise OneClassOnly("corpus must contain both benign and malware sessions")
    n_b, n_m = len(by_label[BENIGN]), len(by_label[MALWARE])
    if n_b == n_m:
        return LabeledCorpus(corpus.dataset_name, list(corpus.sessions))
    major, minor_n = (BENIGN, n_m) if n_b > n_m else (MALWARE, n_b)
    rng = random.Random(seed)
    keep_major = set(rng.sample(by_label[major], minor_n))
    kept = [
        ls
        for i, ls in enumerate(corpus.sessions)
        if ls.label != major or i in keep_major
    ]
    return LabeledCorpus(corpus.dataset_name, kept)


def is_tls_session(sess: Session) -> bool:
    """True if any packet payload starts with a plausible TLS record header."""
    for pkt in sess.packets:
        p = pkt.payload
        if len(p) >= 3 and p[0] in (0x14, 0x15, 0x16, 0x17) and p[1] == 0x03 and 1 <= p[2] <= 4:
            return True
    return False


def compute_tls_share(corpus: LabeledCorpus) -> CorpusStats:
    label_counts: Dict[str, int] = {}
    family_counts: Dict[str, int] = {}
    tls_counts: Dict[str, int] = {}
    for ls in corpus.sessions:
        label_counts[ls.label] = label_counts.get(ls.label, 0) + 1
        family_counts[ls.family] = family_counts.get(ls.family, 0) + 1
        if is_tls_session(ls.session):
            tls_counts[ls.label] = tls_counts.get(ls.label, 0) + 1
    tls_share = {
        label: tls_counts.get(label, 0) / n for label, n in label_counts.items()
    }
    return CorpusStats(label_counts, family_counts, tls_share)


def min_family_filter(
    corpus: LabeledCorpus, min_sessions: int = MIN_FAMILY_SESSIONS
) -> LabeledCorpus:
    """Drop malware families with fewer than ``min_sessions`` sessions."""
    counts: Dict[str, int] = {}
    for ls in corpus.sessions:
        if ls.label == MALWARE:
            counts[ls.family] = counts.get(ls.family, 0) + 1
    kept = [
        ls
        for ls in corpus.sessions
        if ls.label == BENIGN or counts[ls.family] >= min_sessions
    ]
    return LabeledCorpus(corpus.dataset_name, kept)


# ---------------------------------------------------------------------------
# Corpus store: magic "MTC1", length-prefixed session records, trailing CRC32.


def _pack_str(s: str) -> bytes:
    b = s.encode("utf-8")
    return struct.pack("<H", len(b)) + b


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise CorruptStore("record overruns file")
        b = self.data[self.off : self.off + n]
        self.off += n
        return b

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def string(self) -> str:
        (n,) = self.unpack("<H")
        return self.take(n).decode("utf-8")


def _pack_session(ls: LabeledSession) -> bytes:
    sess = ls.session
    out = [
        ls.session_id,
        struct.pack("<B", 1 if ls.label == MALWARE else 0),
        _pack_str(ls.family),
        _pack_str(ls.source_dataset),
        _pack_str(ls.capture_path),
        struct.pack("<B", 1 if sess.key.transport == TCP else 0),
        _pack_str(sess.initiator[0]),
        struct.pack("<H", sess.initiator[1]),
        _pack_str(sess.responder[0]),
        struct.pack("<H", sess.responder[1]),
        struct.pack("<I", sess.session_index),
        struct.pack("<I", len(sess.packets)),
    ]
    for pkt in sess.packets:
        out.append(
            struct.pack(
                "<QBBII",
                pkt.timestamp,
                0 if sess.direction(pkt) == 1 else 1,
                pkt.tcp_flags,
                pkt.caplen,
                pkt.wirelen,
            )
        )
        out.append(struct.pack("<I", len(pkt.payload)))
        out.append(pkt.payload)
    return b"".join(out)


def save_corpus(corpus: LabeledCorpus, path: str) -> None:
    body = [
        _STORE_MAGIC,
        struct.pack("<H", _STORE_VERSION),
        _pack_str(corpus.dataset_name),
        struct.pack("<I", len(corpus.sessions)),
    ]
    for ls in corpus.sessions:
        rec = _pack_session(ls)
        body.append(struct.pack("<I", len(rec)))
        body.append(rec)
    blob = b"".join(body)
    with open(path, "wb") as fh:
        fh.write(blob)
        fh.write(struct.pack("<I", zlib.crc32(blob)))


def _unpack_session(rec: bytes) -> LabeledSession:
    r = _Reader(rec)
    session_id = r.take(16)
    (label_b,) = r.unpack("<B")
    family = r.string()
    source = r.string()
    capture_path = r.string()
    (transport_b,) = r.unpack("<B")
    transport = TCP if transport_b else UDP
    init_addr = r.string()
    (init_port,) = r.unpack("<H")
    resp_addr = r.string()
    (resp_port,) = r.unpack("<H")
    (session_index,) = r.unpack("<I")
    (n_pkts,) = r.unpack("<I")
    initiator = (init_addr, init_port)
    responder = (resp_addr, resp_port)
    a, b = (initiator, responder) if initiator <= responder else (responder, initiator)
    key = FlowKey(a, b, transport)
    packets: List[ParsedPacket] = []
    for _ in range(n_pkts):
        ts, direction, flags, caplen, wirelen = r.unpack("<QBBII")
        (plen,) = r.unpack("<I")
        payload = r.take(plen)
        src, dst = (initiator, responder) if direction == 0 else (responder, initiator)
        packets.append(
            ParsedPacket(
                timestamp=ts,
                ip_src=src[0],
                ip_dst=dst[0],
                port_src=src[1],
                port_dst=dst[1],
                transport=transport,
                tcp_flags=flags,
                payload=payload,
                caplen=caplen,
                wirelen=wirelen,
            )
        )
    sess = Session(key=key, initiator=initiator, packets=packets, session_index=session_index)
    return LabeledSession(
        session=sess,
        label=MALWARE if label_b else BENIGN,
        family=family,
        source_dataset=source,
        capture_path=capture_path,
        session_id=session_id,
    )


def load_corpus(path: str) -> LabeledCorpus:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except FileNotFoundError as exc:
        raise MissingFile(str(exc)) from exc
    if len(data) < 10 or data[:4] != _STORE_MAGIC:
        raise CorruptStore("bad corpus magic")
    blob, crc = data[:-4], struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(blob) != crc:
        raise CorruptStore("checksum mismatch")
    r = _Reader(blob)
    r.take(4)
    (version,) = r.unpack("<H")
    if version != _STORE_VERSION:
        raise CorruptStore(f"unsupported store version {version}")
    name = r.string()
    (count,) = r.unpack("<I")
    sessions = []
    for _ in range(count):
        (rec_len,) = r.unpack("<I")
        sessions.append(_unpack_session(r.take(rec_len)))
    return LabeledCorpus(dataset_name=name, sessions=sessions)
