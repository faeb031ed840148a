"""Envelope codec, byte/round ledger, and the in-process and TCP backends."""

from .ledger import Event, Ledger, SessionStats
from .network import InProcNetwork, Mailbox, Network
from .tcp import TcpNetwork, parse_bind
from .wire import Envelope, decode, encode, frame

__all__ = [
    "Envelope", "Event", "InProcNetwork", "Ledger", "Mailbox", "Network", "SessionStats",
    "TcpNetwork", "decode", "encode", "frame", "parse_bind",
]
