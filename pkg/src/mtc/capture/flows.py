"""Canonical bidirectional flows and session assembly."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Tuple

from .pcapfile import ACK, FIN, ParsedPacket, RST, SYN, TCP

Endpoint = Tuple[str, int]

DIR_FWD = 1  # initiator -> responder
DIR_BWD = -1

DEFAULT_TCP_IDLE_TIMEOUT = 300.0
DEFAULT_UDP_IDLE_TIMEOUT = 300.0


@dataclass(frozen=True)
class FlowKey:
    """Unordered 5-tuple: both directions of a flow map to the same key."""

    endpoint_a: Endpoint
    endpoint_b: Endpoint
    transport: str

    @classmethod
    def from_packet(cls, pkt: ParsedPacket) -> "FlowKey":
        src = (pkt.ip_src, pkt.port_src)
        dst = (pkt.ip_dst, pkt.port_dst)
        a, b = (src, dst) if src <= dst else (dst, src)
        return cls(a, b, pkt.transport)


@dataclass
class Session:
    """All packets of one flow between demarcation events, time-ordered."""

    key: FlowKey
    initiator: Endpoint
    packets: List[ParsedPacket]
    session_index: int = 0

    @property
    def responder(self) -> Endpoint:
        if self.initiator == self.key.endpoint_a:
            return self.key.endpoint_b
        return self.key.endpoint_a

    @property
    def total_payload_bytes(self) -> int:
        return sum(len(p.payload) for p in self.packets)

    def direction(self, pkt: ParsedPacket) -> int:
        return DIR_FWD if (pkt.ip_src, pkt.port_src) == self.initiator else DIR_BWD

    @property
    def directions(self) -> List[int]:
        return [self.direction(p) for p in self.packets]

    @property
    def start_time(self) -> int:
        return self.packets[0].timestamp

    @property
    def duration_seconds(self) -> float:
        return (self.packets[-1].timestamp - self.packets[0].timestamp) / 1e6


class _FlowState:
    __slots__ = ("session", "fin_fwd", "fin_bwd", "rst")

    def __init__(self, session: Session):
        self.session = session
        self.fin_fwd = False
        self.fin_bwd = False
        self.rst = False

    @property
    def completed(self) -> bool:
        return self.rst or (self.fin_fwd and self.fin_bwd)


def assemble_sessions(
    packets: Iterable[ParsedPacket],
    tcp_idle_timeout: float = DEFAULT_TCP_IDLE_TIMEOUT,
    udp_idle_timeout: float = DEFAULT_UDP_IDLE_TIMEOUT,
) -> List[Session]:
    """Group time-ordered packets into sessions.

    A new session on an existing flow key starts after the idle timeout,
    or (TCP only) when a fresh SYN arrives once the previous session saw
    FIN in both directions or a RST. Trailing ACKs of a torn-down
    connection stay with the old session.
    """
    sessions: List[Session] = []
    active: dict[FlowKey, _FlowState] = {}
    next_index: dict[FlowKey, int] = {}

    for pkt in packets:
        key = FlowKey.from_packet(pkt)
        state = active.get(key)
        if state is not None:
            gap = (pkt.timestamp - state.session.packets[-1].timestamp) / 1e6
            timeout = tcp_idle_timeout if key.transport == TCP else udp_idle_timeout
            fresh_syn = (
                key.transport == TCP
                and state.completed
                and pkt.tcp_flags & SYN
                and not pkt.tcp_flags & ACK
            )
            if gap > timeout or fresh_syn:
                state = None
        if state is None:
            idx = next_index.get(key, 0)
            next_index[key] = idx + 1
            session = Session(
                key=key,
                initiator=(pkt.ip_src, pkt.port_src),
                packets=[],
                session_index=idx,
            )
            state = _FlowState(session)
            active[key] = state
            sessions.append(session)
        state.session.packets.append(pkt)
        if key.transport == TCP:
            if pkt.tcp_flags & RST:
                state.rst = True
            if pkt.tcp_flags & FIN:
                if state.session.direction(pkt) == DIR_FWD:
                    state.fin_fwd = True
                else:
                    state.fin_bwd = True
    return sessions
