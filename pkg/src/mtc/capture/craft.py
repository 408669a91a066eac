"""Byte-level builders for Ethernet/IPv4 frames and pcap files.

Used by the synthetic-corpus generator and by tests that need
deterministic capture files without external data.
"""

from __future__ import annotations

import struct
from typing import Iterable, Tuple

_MAC_SRC = bytes.fromhex("020000000001")
_MAC_DST = bytes.fromhex("020000000002")


def _ipv4_bytes(addr: str) -> bytes:
    return bytes(int(p) for p in addr.split("."))


def _checksum(data: bytes) -> int:
    if len(data) % 2:
        data += b"\x00"
    total = sum(struct.unpack(">%dH" % (len(data) // 2), data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def ipv4_header(src: str, dst: str, proto: int, payload_len: int, ident: int = 0) -> bytes:
    hdr = struct.pack(
        ">BBHHHBBH4s4s",
        0x45,
        0,
        20 + payload_len,
        ident,
        0,
        64,
        proto,
        0,
        _ipv4_bytes(src),
        _ipv4_bytes(dst),
    )
    return hdr[:10] + struct.pack(">H", _checksum(hdr)) + hdr[12:]


def tcp_frame(
    src: str,
    sport: int,
    dst: str,
    dport: int,
    flags: int,
    payload: bytes = b"",
    seq: int = 0,
    ack: int = 0,
) -> bytes:
    tcp = struct.pack(">HHIIBBHHH", sport, dport, seq, ack, 5 << 4, flags, 65535, 0, 0)
    ip = ipv4_header(src, dst, 6, len(tcp) + len(payload))
    return _MAC_DST + _MAC_SRC + b"\x08\x00" + ip + tcp + payload


def udp_frame(src: str, sport: int, dst: str, dport: int, payload: bytes = b"") -> bytes:
    udp = struct.pack(">HHHH", sport, dport, 8 + len(payload), 0)
    ip = ipv4_header(src, dst, 17, len(udp) + len(payload))
    return _MAC_DST + _MAC_SRC + b"\x08\x00" + ip + udp + payload


def arp_frame() -> bytes:
    body = struct.pack(">HHBBH", 1, 0x0800, 6, 4, 1)
    body += _MAC_SRC + _ipv4_bytes("10.0.0.1") + b"\x00" * 6 + _ipv4_bytes("10.0.0.2")
    return _MAC_DST + _MAC_SRC + b"\x08\x06" + body


def ipv4_fragment_frame(
    src: str, dst: str, proto: int, frag_offset_units: int, body: bytes, more: bool = False
) -> bytes:
    """A raw IPv4 fragment (offset in 8-byte units) for fragment-skip tests."""
    frag = (0x2000 if more else 0) | (frag_offset_units & 0x1FFF)
    hdr = struct.pack(
        ">BBHHHBBH4s4s",
        0x45,
        0,
        20 + len(body),
        1,
        frag,
        64,
        proto,
        0,
        _ipv4_bytes(src),
        _ipv4_bytes(dst),
    )
    hdr = hdr[:10] + struct.pack(">H", _checksum(hdr)) + hdr[12:]
    return _MAC_DST + _MAC_SRC + b"\x08\x00" + hdr + body


def write_pcap(
    path: str,
    frames: Iterable[Tuple[int, bytes]],
    nanosecond: bool = False,
    big_endian: bool = False,
) -> None:
    """Write (timestamp_us, frame) pairs as a classic Ethernet pcap."""
    endian = ">" if big_endian else "<"
    magic = 0xA1B23C4D if nanosecond else 0xA1B2C3D4
    with open(path, "wb") as fh:
        fh.write(struct.pack(endian + "IHHiIII", magic, 2, 4, 0, 0, 262144, 1))
        for ts_us, frame in frames:
            sec, rem = divmod(ts_us, 1_000_000)
            frac = rem * 1000 if nanosecond else rem
            fh.write(struct.pack(endian + "IIII", sec, frac, len(frame), len(frame)))
            fh.write(frame)


def write_pcapng(path: str, frames: Iterable[Tuple[int, bytes]]) -> None:
    """Write (timestamp_us, frame) pairs as a minimal pcapng (one interface)."""

    def block(btype: int, body: bytes) -> bytes:
        pad = (-len(body)) % 4
        total = 12 + len(body) + pad
        return (
            struct.pack("<II", btype, total)
            + body
            + b"\x00" * pad
            + struct.pack("<I", total)
        )

    out = block(0x0A0D0D0A, struct.pack("<IHHq", 0x1A2B3C4D, 1, 0, -1))
    out += block(1, struct.pack("<HHI", 1, 0, 0))  # Ethernet, no snaplen
    for ts_us, frame in frames:
        body = struct.pack(
            "<IIIII", 0, ts_us >> 32, ts_us & 0xFFFFFFFF, len(frame), len(frame)
        )
        pad = (-len(frame)) % 4
        out += block(6, body + frame + b"\x00" * pad)
    with open(path, "wb") as fh:
        fh.write(out)
