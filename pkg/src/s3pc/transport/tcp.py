"""TCP backend: one listener per party role, one connection per directed pair.

Frames are a 4-byte big-endian length followed by an encoded envelope. All
roles may live in one process (each with its own socket endpoint) or the
addresses may point at remote listeners started the same way.
"""

from __future__ import annotations

import logging
import socket
import threading
from collections.abc import Iterable, Mapping

from ..errors import S3PCError, TransportError
from ..roles import Role
from .network import PARTY_ROLES, Network
from .wire import FRAME, Envelope, frame

log = logging.getLogger(__name__)

Address = tuple[str, int]


def parse_bind(items: Iterable[str]) -> dict[Role, Address]:
    """Parse ``ROLE=HOST:PORT`` strings."""
    out: dict[Role, Address] = {}
    for item in items:
        try:
            role, addr = item.split("=", 1)
            host, port = addr.rsplit(":", 1)
            out[Role.parse(role)] = (host, int(port))
        except ValueError:
            raise ValueError(f"expected ROLE=HOST:PORT, got {item!r}") from None
    return out


def _recv_exact(sock: socket.socket, n: int) -> bytes | None:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(min(n - len(buf), 1 << 20))
        if not chunk:
            return None
        buf += chunk
    return bytes(buf)


class TcpNetwork(Network):
    cooperative = False

    def __init__(self, bind: Mapping[Role, Address] | None = None,
                 roles: Iterable[Role] = PARTY_ROLES, record_transcript: bool = False,
                 connect_timeout: float = 10.0):
        super().__init__(roles, record_transcript)
        bind = dict(bind or {})
        self.connect_timeout = connect_timeout
        self.addresses: dict[Role, Address] = {}
        self._listeners: list[socket.socket] = []
        self._conns: dict[tuple[Role, Role], socket.socket] = {}
        self._conn_locks: dict[tuple[Role, Role], threading.Lock] = {}
        self._conn_guard = threading.Lock()
        self._readers: list[socket.socket] = []
        self._closed = threading.Event()
        try:
            for role in self.mailboxes:
                host, port = bind.get(role, ("127.0.0.1", 0))
                srv = socket.create_server((host, port))
                self._listeners.append(srv)
                self.addresses[role] = srv.getsockname()[:2]
                threading.Thread(target=self._accept_loop, args=(srv, role),
                                 name=f"tcp-accept-{role.label}", daemon=True).start()
        except OSError:
            self.close()
            raise

    def _accept_loop(self, srv: socket.socket, role: Role) -> None:
        while not self._closed.is_set():
            try:
                conn, _ = srv.accept()
            except OSError:
                return
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            with self._conn_guard:
                self._readers.append(conn)
            threading.Thread(target=self._read_loop, args=(conn, role),
                             name=f"tcp-read-{role.label}", daemon=True).start()

    def _read_loop(self, conn: socket.socket, role: Role) -> None:
        try:
            while True:
                head = _recv_exact(conn, FRAME.size)
                if head is None:
                    return
                (length,) = FRAME.unpack(head)
                body = _recv_exact(conn, length)
                if body is None:
                    raise TransportError("connection closed mid-frame", role=role.label)
                env = self._accept(body)
                if env.receiver != role:
                    raise TransportError(f"envelope for {env.receiver.label} arrived at "
                                         f"{role.label}", session=env.session, step=env.step)
        except (OSError, S3PCError) as exc:
            if not self._closed.is_set():
                log.error("reader for %s failed: %s", role.label, exc)
        finally:
            conn.close()

    def _connection(self, sender: Role, receiver: Role) -> tuple[socket.socket, threading.Lock]:
        key = (sender, receiver)
        with self._conn_guard:
            sock = self._conns.get(key)
            if sock is None:
                sock = socket.create_connection(self.addresses[receiver], timeout=self.connect_timeout)
                sock.settimeout(None)
                sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                self._conns[key] = sock
                self._conn_locks[key] = threading.Lock()
            return sock, self._conn_locks[key]

    def _deliver(self, env: Envelope, data: bytes) -> None:
        try:
            sock, lock = self._connection(env.sender, env.receiver)
            with lock:
                sock.sendall(frame(data))
        except OSError as exc:
            raise TransportError(f"send to {env.receiver.label} failed: {exc}",
                                 session=env.session, step=env.step,
                                 role=env.sender.label) from exc

    def close(self) -> None:
        self._closed.set()
        with self._conn_guard:
            socks = list(self._conns.values()) + self._readers + self._listeners
            self._conns.clear()
        for s in socks:
            try:
                s.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            s.close()
