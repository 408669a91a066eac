from .pcapfile import ParsedPacket, ParseCounters, parse_capture, TCP, UDP
from .flows import FlowKey, Session, assemble_sessions

__all__ = [
    "ParsedPacket",
    "ParseCounters",
    "parse_capture",
    "FlowKey",
    "Session",
    "assemble_sessions",
    "TCP",
    "UDP",
]
