"""Per-session byte and round accounting."""

from __future__ import annotations

import threading
from collections import Counter
from dataclasses import dataclass, field

from ..errors import UnknownSessionError
from ..roles import Role

PHASES = ("preprocess", "online", "verify")


@dataclass(frozen=True)
class Event:
    step: int
    sender: Role
    receiver: Role
    payload_bytes: int
    header_bytes: int


@dataclass
class SessionStats:
    payload_bytes: int = 0
    header_bytes: int = 0
    rounds: int = 0
    by_pair: Counter = field(default_factory=Counter)
    rounds_by_phase: Counter = field(default_factory=lambda: Counter({p: 0 for p in PHASES}))
    bytes_by_phase: Counter = field(default_factory=lambda: Counter({p: 0 for p in PHASES}))
    events: list[Event] = field(default_factory=list)

    def add(self, ev: Event) -> None:
        # Verification exchanges no messages of its own: every VF travels
        # during the online phase, so only two phases ever accrue here.
        phase = "preprocess" if ev.sender == Role.CS else "online"
        self.payload_bytes += ev.payload_bytes
        self.header_bytes += ev.header_bytes
        self.rounds += 1
        self.by_pair[(ev.sender, ev.receiver)] += ev.payload_bytes
        self.rounds_by_phase[phase] += 1
        self.bytes_by_phase[phase] += ev.payload_bytes
        self.events.append(ev)

    def copy(self) -> SessionStats:
        return SessionStats(self.payload_bytes, self.header_bytes, self.rounds,
                            Counter(self.by_pair), Counter(self.rounds_by_phase),
                            Counter(self.bytes_by_phase), list(self.events))

    def to_dict(self) -> dict:
        return {
            "payload_bytes": self.payload_bytes,
            "header_bytes": self.header_bytes,
            "rounds": self.rounds,
            "rounds_by_phase": dict(self.rounds_by_phase),
            "payload_bytes_by_phase": dict(self.bytes_by_phase),
            "payload_bytes_by_pair": {f"{s.label}->{r.label}": b
                                      for (s, r), b in sorted(self.by_pair.items())},
        }

    def same_counts(self, other: SessionStats) -> bool:
        """Equal totals and the same multiset of messages; arrival order may differ."""
        def key(ev: Event):
            return (ev.step, ev.sender, ev.receiver)

        return (self.payload_bytes, self.header_bytes, self.rounds, self.by_pair,
                sorted(self.events, key=key)) == \
            (other.payload_bytes, other.header_bytes, other.rounds, other.by_pair,
             sorted(other.events, key=key))


class Ledger:
    """Thread-safe map from session id to SessionStats."""

    def __init__(self):
        self._lock = threading.Lock()
        self._sessions: dict[int, SessionStats] = {}

    def open(self, session: int) -> None:
        with self._lock:
            self._sessions.setdefault(session, SessionStats())

    def record(self, session: int, ev: Event) -> None:
        with self._lock:
            self._sessions.setdefault(session, SessionStats()).add(ev)

    def stats(self, session: int) -> SessionStats:
        with self._lock:
            try:
                return self._sessions[session].copy()
            except KeyError:
                raise UnknownSessionError(session) from None

    def sessions(self) -> list[int]:
        with self._lock:
            return sorted(self._sessions)
