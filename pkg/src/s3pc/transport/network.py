"""Mailboxes and the in-process transport.

A network moves Envelopes between roles and keeps the byte/round ledger. Every
message is encoded to bytes and decoded again on delivery, so the in-process
backend exercises exactly the codec the TCP backend uses.
"""

from __future__ import annotations

import threading
import time
from collections.abc import Iterable

from ..errors import TransportError
from ..roles import Role
from .ledger import Event, Ledger
from .wire import Envelope, decode, encode

PARTY_ROLES = (Role.ALICE, Role.BOB, Role.CAROL)

Key = tuple  # (session, step, sender)


class Mailbox:
    """Inbound messages for one role, buffered by (session, step, sender)."""

    def __init__(self, role: Role):
        self.role = role
        self._cond = threading.Condition()
        self._items: dict[Key, Envelope] = {}
        self._aborted: dict[int, BaseException] = {}

    def put(self, env: Envelope) -> None:
        key = (env.session, env.step, env.sender)
        with self._cond:
            if key in self._items:
                raise TransportError("duplicate message", session=env.session,
                                     step=env.step, role=self.role.label)
            self._items[key] = env
            self._cond.notify_all()

    def take(self, key: Key) -> Envelope | None:
        with self._cond:
            self._check_abort(key)
            return self._items.pop(key, None)

    def wait(self, key: Key, timeout: float) -> Envelope:
        deadline = time.monotonic() + timeout
        with self._cond:
            while True:
                self._check_abort(key)
                env = self._items.pop(key, None)
                if env is not None:
                    return env
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TransportError(f"timed out waiting for message from {Role(key[2]).label}",
                                         session=key[0], step=key[1], role=self.role.label)
                self._cond.wait(remaining)

    def abort(self, session: int, exc: BaseException) -> None:
        with self._cond:
            self._aborted[session] = exc
            self._cond.notify_all()

    def discard(self, session: int) -> None:
        with self._cond:
            for key in [k for k in self._items if k[0] == session]:
                del self._items[key]
            self._aborted.pop(session, None)

    def _check_abort(self, key: Key) -> None:
        exc = self._aborted.get(key[0])
        if exc is not None:
            raise TransportError(f"session aborted: {exc!r}", session=key[0], step=key[1],
                                 role=self.role.label)


class Network:
    """Common bookkeeping for both backends; subclasses implement ``_deliver``."""

    #: True when a single thread may drive all parties by polling ``try_recv``.
    cooperative = False

    def __init__(self, roles: Iterable[Role] = PARTY_ROLES, record_transcript: bool = False):
        self.ledger = Ledger()
        self.mailboxes = {Role(r): Mailbox(Role(r)) for r in roles}
        self.record_transcript = record_transcript
        self.transcript: list[Envelope] = []
        self._last_step: dict[tuple[int, Role], int] = {}
        self._lock = threading.Lock()

    def open_session(self, session: int) -> None:
        self.ledger.open(session)

    def send(self, env: Envelope) -> None:
        if env.receiver not in self.mailboxes:
            raise TransportError(f"no endpoint for {env.receiver.label}",
                                 session=env.session, step=env.step, role=env.sender.label)
        with self._lock:
            last = self._last_step.get((env.session, env.sender), -1)
            if env.step <= last:
                raise TransportError(f"step id {env.step} not above previous {last}",
                                     session=env.session, step=env.step, role=env.sender.label)
            self._last_step[(env.session, env.sender)] = env.step
        data = encode(env)
        self.ledger.record(env.session, Event(env.step, env.sender, env.receiver,
                                              env.payload_bytes, len(data) - env.payload_bytes))
        self._deliver(env, data)

    def _accept(self, data: bytes) -> Envelope:
        env = decode(data)
        if self.record_transcript:
            with self._lock:
                self.transcript.append(env)
        self.mailboxes[env.receiver].put(env)
        return env

    def _deliver(self, env: Envelope, data: bytes) -> None:
        raise NotImplementedError

    def recv(self, role: Role, session: int, step: int, sender: Role, timeout: float) -> Envelope:
        return self.mailboxes[role].wait((session, step, sender), timeout)

    def try_recv(self, role: Role, session: int, step: int, sender: Role) -> Envelope | None:
        return self.mailboxes[role].take((session, step, sender))

    def abort(self, session: int, exc: BaseException) -> None:
        for box in self.mailboxes.values():
            box.abort(session, exc)

    def discard(self, session: int) -> None:
        for box in self.mailboxes.values():
            box.discard(session)

    def received_by(self, role: Role, session: int | None = None) -> list[Envelope]:
        return [e for e in self.transcript
                if e.receiver == role and (session is None or e.session == session)]

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class InProcNetwork(Network):
    """All roles share one address space; delivery is a decode into the peer's mailbox."""

    cooperative = True

    def _deliver(self, env: Envelope, data: bytes) -> None:
        self._accept(data)
