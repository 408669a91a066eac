"""Reader for classic pcap and pcapng capture files.

Only what the pipeline needs is decoded: Ethernet / raw-IP / BSD-null link
layers, IPv4 and IPv6 (basic extension-header walk), TCP and UDP. Everything
else is skipped and counted. Payload means transport-layer payload: link, IP
and TCP/UDP headers are stripped.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator, Optional

from ..errors import UnreadableFile

TCP = "tcp"
UDP = "udp"

# TCP flag bits
FIN = 0x01
SYN = 0x02
RST = 0x04
PSH = 0x08
ACK = 0x10

_PCAP_MAGIC_US = 0xA1B2C3D4
_PCAP_MAGIC_NS = 0xA1B23C4D
_PCAPNG_MAGIC = 0x0A0D0D0A

LINKTYPE_NULL = 0
LINKTYPE_ETHERNET = 1
LINKTYPE_RAW = 101

_ETH_IPV4 = 0x0800
_ETH_IPV6 = 0x86DD
_ETH_VLAN = 0x8100


@dataclass(frozen=True)
class ParsedPacket:
    """One accepted TCP/UDP packet with its transport payload."""

    timestamp: int  # microseconds since epoch
    ip_src: str
    ip_dst: str
    port_src: int
    port_dst: int
    transport: str  # TCP or UDP
    tcp_flags: int  # 0 for UDP
    payload: bytes
    caplen: int
    wirelen: int


@dataclass
class ParseCounters:
    """Skip/warning tallies filled while iterating a capture."""

    skipped_non_ip: int = 0
    skipped_fragments: int = 0
    skipped_transport: int = 0
    truncated_records: int = 0

    @property
    def skipped_total(self) -> int:
        return self.skipped_non_ip + self.skipped_fragments + self.skipped_transport


def _ipv4_str(b: bytes) -> str:
    return "%d.%d.%d.%d" % (b[0], b[1], b[2], b[3])


def _ipv6_str(b: bytes) -> str:
    groups = ["%x" % struct.unpack(">H", b[i : i + 2])[0] for i in range(0, 16, 2)]
    return ":".join(groups)


def _decode_link(linktype: int, frame: bytes) -> Optional[bytes]:
    """Strip the link-layer header, returning the IP datagram or None."""
    if linktype == LINKTYPE_ETHERNET:
        if len(frame) < 14:
            return None
        ethertype = struct.unpack(">H", frame[12:14])[0]
        off = 14
        while ethertype == _ETH_VLAN:
            if len(frame) < off + 4:
                return None
            ethertype = struct.unpack(">H", frame[off + 2 : off + 4])[0]
            off += 4
        if ethertype in (_ETH_IPV4, _ETH_IPV6):
            return frame[off:]
        return None
    if linktype == LINKTYPE_RAW:
        return frame
    if linktype == LINKTYPE_NULL:
        if len(frame) < 4:
            return None
        return frame[4:]
    raise UnreadableFile(f"unsupported link type {linktype}")


def _decode_ip(datagram: bytes, counters: ParseCounters):
    """Return (src, dst, proto, l4bytes) or None after counting a skip."""
    if not datagram:
        counters.skipped_non_ip += 1
        return None
    version = datagram[0] >> 4
    if version == 4:
        if len(datagram) < 20:
            counters.skipped_non_ip += 1
            return None
        ihl = (datagram[0] & 0x0F) * 4
        total_len = struct.unpack(">H", datagram[2:4])[0]
        frag = struct.unpack(">H", datagram[6:8])[0]
        if frag & 0x1FFF:  # non-first fragment
            counters.skipped_fragments += 1
            return None
        proto = datagram[9]
        src = _ipv4_str(datagram[12:16])
        dst = _ipv4_str(datagram[16:20])
        end = min(len(datagram), max(total_len, ihl))
        l4 = datagram[ihl:end]
    elif version == 6:
        if len(datagram) < 40:
            counters.skipped_non_ip += 1
            return None
        payload_len = struct.unpack(">H", datagram[4:6])[0]
        nh = datagram[6]
        src = _ipv6_str(datagram[8:24])
        dst = _ipv6_str(datagram[24:40])
        end = min(len(datagram), 40 + payload_len)
        body = datagram[40:end]
        # basic next-header walk
        while nh in (0, 43, 60):
            if len(body) < 8:
                counters.skipped_non_ip += 1
                return None
            nh, hdr_len = body[0], (body[1] + 1) * 8
            if len(body) < hdr_len:
                counters.skipped_non_ip += 1
                return None
            body = body[hdr_len:]
        if nh == 44:  # fragment header
            if len(body) < 8:
                counters.skipped_non_ip += 1
                return None
            offset = struct.unpack(">H", body[2:4])[0] >> 3
            if offset:
                counters.skipped_fragments += 1
                return None
            nh = body[0]
            body = body[8:]
        proto = nh
        l4 = body
    else:
        counters.skipped_non_ip += 1
        return None
    if proto not in (6, 17):
        counters.skipped_transport += 1
        return None
    return src, dst, proto, l4


def decode_frame(
    linktype: int,
    timestamp: int,
    frame: bytes,
    wirelen: int,
    counters: ParseCounters,
) -> Optional[ParsedPacket]:
    """Decode one captured frame into a ParsedPacket, or count a skip."""
    ip = _decode_link(linktype, frame)
    if ip is None:
        counters.skipped_non_ip += 1
        return None
    decoded = _decode_ip(ip, counters)
    if decoded is None:
        return None
    src, dst, proto, l4 = decoded
    if proto == 6:
        if len(l4) < 20:
            counters.skipped_transport += 1
            return None
        sport, dport = struct.unpack(">HH", l4[0:4])
        doff = (l4[12] >> 4) * 4
        flags = l4[13]
        payload = l4[doff:] if doff <= len(l4) else b""
        transport = TCP
    else:
        if len(l4) < 8:
            counters.skipped_transport += 1
            return None
        sport, dport, ulen = struct.unpack(">HHH", l4[0:6])
        payload = l4[8 : max(8, min(len(l4), ulen))]
        flags = 0
        transport = UDP
    return ParsedPacket(
        timestamp=timestamp,
        ip_src=src,
        ip_dst=dst,
        port_src=sport,
        port_dst=dport,
        transport=transport,
        tcp_flags=flags,
        payload=payload,
        caplen=len(frame),
        wirelen=wirelen,
    )


def _iter_pcap(data: bytes, counters: ParseCounters):
    magic = struct.unpack("<I", data[0:4])[0]
    if magic in (_PCAP_MAGIC_US, _PCAP_MAGIC_NS):
        endian = "<"
    else:
        magic = struct.unpack(">I", data[0:4])[0]
        if magic not in (_PCAP_MAGIC_US, _PCAP_MAGIC_NS):
            raise UnreadableFile("bad pcap magic")
        endian = ">"
    nanos = magic == _PCAP_MAGIC_NS
    if len(data) < 24:
        raise UnreadableFile("truncated pcap file header")
    linktype = struct.unpack(endian + "I", data[20:24])[0]
    off = 24
    while off < len(data):
        if off + 16 > len(data):
            counters.truncated_records += 1
            return
        sec, frac, incl, orig = struct.unpack(endian + "IIII", data[off : off + 16])
        off += 16
        if off + incl > len(data):
            counters.truncated_records += 1
            return
        frame = data[off : off + incl]
        off += incl
        ts = sec * 1_000_000 + (frac // 1000 if nanos else frac)
        pkt = decode_frame(linktype, ts, frame, orig, counters)
        if pkt is not None:
            yield pkt


def _opt_tsresol(options: bytes) -> int:
    """Ticks per second from an IDB option block (default 10^6)."""
    off = 0
    while off + 4 <= len(options):
        code, length = struct.unpack("<HH", options[off : off + 4])
        off += 4
        if code == 0:
            break
        val = options[off : off + length]
        off += (length + 3) & ~3
        if code == 9 and length >= 1:
            v = val[0]
            return 2 ** (v & 0x7F) if v & 0x80 else 10 ** v
    return 1_000_000


def _iter_pcapng(data: bytes, counters: ParseCounters):
    off = 0
    endian = "<"
    interfaces: list[tuple[int, int]] = []  # (linktype, ticks per second)
    first = True
    while off + 12 <= len(data):
        btype = struct.unpack(endian + "I", data[off : off + 4])[0]
        if btype == _PCAPNG_MAGIC:
            bom = data[off + 8 : off + 12]
            if bom == b"\x1a\x2b\x3c\x4d":
                endian = ">"  # big-endian section
            elif bom != b"\x4d\x3c\x2b\x1a":
                raise UnreadableFile("bad pcapng byte-order magic")
            btype = struct.unpack(endian + "I", data[off : off + 4])[0]
        elif first:
            raise UnreadableFile("pcapng file does not start with a section header")
        first = False
        blen = struct.unpack(endian + "I", data[off + 4 : off + 8])[0]
        if blen < 12 or off + blen > len(data):
            counters.truncated_records += 1
            return
        body = data[off + 8 : off + blen - 4]
        if btype == 0x0A0D0D0A:
            interfaces = []
        elif btype == 1:  # interface description
            linktype = struct.unpack(endian + "H", body[0:2])[0]
            interfaces.append((linktype, _opt_tsresol(body[8:])))
        elif btype == 6:  # enhanced packet
            if len(body) < 20:
                counters.truncated_records += 1
                return
            ifid, ts_hi, ts_lo, caplen, orig = struct.unpack(
                endian + "IIIII", body[0:20]
            )
            if ifid >= len(interfaces):
                raise UnreadableFile(f"EPB references unknown interface {ifid}")
            linktype, resol = interfaces[ifid]
            ticks = (ts_hi << 32) | ts_lo
            ts = ticks * 1_000_000 // resol
            frame = body[20 : 20 + caplen]
            if len(frame) < caplen:
                counters.truncated_records += 1
                return
            pkt = decode_frame(linktype, ts, frame, orig, counters)
            if pkt is not None:
                yield pkt
        # other block types (SPB, NRB, statistics, custom) are skipped
        off += blen


def parse_capture(path: str, counters: ParseCounters | None = None) -> Iterator[ParsedPacket]:
    """Yield accepted TCP/UDP packets from a pcap or pcapng file.

    ``counters`` (if given) accumulates skip/truncation tallies as the
    stream is consumed.
    """
    if counters is None:
        counters = ParseCounters()
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except FileNotFoundError as exc:
        raise UnreadableFile(str(exc)) from exc
    if len(data) < 4:
        raise UnreadableFile("file too short for any capture magic")
    magic_le = struct.unpack("<I", data[0:4])[0]
    if magic_le == _PCAPNG_MAGIC:
        yield from _iter_pcapng(data, counters)
    else:
        yield from _iter_pcap(data, counters)
