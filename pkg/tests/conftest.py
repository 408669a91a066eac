import numpy as np
import pytest

from mtc.capture import FlowKey, ParsedPacket, Session
from mtc.dataset import LabeledSession, session_digest

CLIENT = ("10.0.0.1", 40001)
SERVER = ("192.0.2.5", 443)


def mk_packet(
    src,
    dst,
    payload=b"",
    ts=1_000_000_000,
    transport="tcp",
    flags=0x18,
):
    return ParsedPacket(
        timestamp=ts,
        ip_src=src[0],
        ip_dst=dst[0],
        port_src=src[1],
        port_dst=dst[1],
        transport=transport,
        tcp_flags=flags if transport == "tcp" else 0,
        payload=payload,
        caplen=54 + len(payload),
        wirelen=54 + len(payload),
    )


def mk_session(
    payloads,
    client=CLIENT,
    server=SERVER,
    transport="tcp",
    t0=1_000_000_000,
    gap_us=1000,
    session_index=0,
):
    """payloads: list of (direction, bytes) with direction +1 = client->server."""
    packets = []
    for i, (direction, data) in enumerate(payloads):
        src, dst = (client, server) if direction > 0 else (server, client)
        packets.append(
            mk_packet(src, dst, data, ts=t0 + i * gap_us, transport=transport)
        )
    key = FlowKey.from_packet(packets[0])
    return Session(key=key, initiator=client, packets=packets, session_index=session_index)


def mk_labeled(session, label="benign", family="benign", source="test",
               path="mem://capture.pcap"):
    return LabeledSession(
        session=session,
        label=label,
        family=family,
        source_dataset=source,
        capture_path=path,
        session_id=session_digest(path, session.key, session.session_index),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(42)
