"""Bit-exact envelope codec.

Layout (little-endian)::

    magic "EVAS" | version u8 | protocol u8 | session u64 | step u16 |
    sender u8 | receiver u8 | count u8 |
    count × ( rows u32 | cols u32 | rows*cols f64, row-major )

TCP framing adds a 4-byte big-endian length prefix in front of each envelope.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ..errors import WireFormatError
from ..roles import ProtocolId, Role

MAGIC = b"EVAS"
VERSION = 1

HEADER = struct.Struct("<4sBBQHBBB")
DIMS = struct.Struct("<II")
FRAME = struct.Struct(">I")
ELEMENT_BYTES = 8
MAX_MATRICES = 255
MAX_STEP = 0xFFFF

_F8 = np.dtype("<f8")


@dataclass(frozen=True, eq=False)
class Envelope:
    protocol: ProtocolId
    session: int
    step: int
    sender: Role
    receiver: Role
    matrices: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "protocol", ProtocolId(self.protocol))
        object.__setattr__(self, "sender", Role(self.sender))
        object.__setattr__(self, "receiver", Role(self.receiver))
        object.__setattr__(self, "matrices", tuple(self.matrices))
        if not 0 <= self.session < 2**64:
            raise WireFormatError(f"session id {self.session} out of u64 range")
        if not 0 <= self.step <= MAX_STEP:
            raise WireFormatError(f"step id {self.step} out of u16 range")
        if len(self.matrices) > MAX_MATRICES:
            raise WireFormatError(f"at most {MAX_MATRICES} matrices per envelope")

    @property
    def payload_bytes(self) -> int:
        return ELEMENT_BYTES * sum(m.size for m in self.matrices)

    @property
    def header_bytes(self) -> int:
        return HEADER.size + DIMS.size * len(self.matrices)

    def same_as(self, other: Envelope) -> bool:
        """Bitwise equality, including the float payloads."""
        return (
            (self.protocol, self.session, self.step, self.sender, self.receiver)
            == (other.protocol, other.session, other.step, other.sender, other.receiver)
            and len(self.matrices) == len(other.matrices)
            and all(a.shape == b.shape and a.astype(_F8).tobytes() == b.astype(_F8).tobytes()
                    for a, b in zip(self.matrices, other.matrices))
        )


def encode(env: Envelope) -> bytes:
    parts = [HEADER.pack(MAGIC, VERSION, env.protocol, env.session, env.step,
                         env.sender, env.receiver, len(env.matrices))]
    for m in env.matrices:
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise WireFormatError(f"cannot encode array of shape {m.shape}")
        if m.shape[0] >= 2**32 or m.shape[1] >= 2**32:
            raise WireFormatError(f"matrix dimensions {m.shape} exceed u32")
        data = np.ascontiguousarray(m, dtype=_F8)
        if not np.isfinite(data).all():
            raise WireFormatError("refusing to encode non-finite values")
        parts.append(DIMS.pack(*m.shape))
        parts.append(data.tobytes())
    return b"".join(parts)


def decode(buf: bytes) -> Envelope:
    view = memoryview(buf)
    if len(view) < HEADER.size:
        raise WireFormatError(f"truncated header: {len(view)} bytes")
    magic, version, proto, session, step, sender, receiver, count = HEADER.unpack_from(view, 0)
    if magic != MAGIC:
        raise WireFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise WireFormatError(f"unsupported version {version}")
    try:
        proto, sender, receiver = ProtocolId(proto), Role(sender), Role(receiver)
    except ValueError as exc:
        raise WireFormatError(str(exc)) from None

    offset = HEADER.size
    matrices = []
    for _ in range(count):
        if len(view) < offset + DIMS.size:
            raise WireFormatError("truncated matrix header")
        rows, cols = DIMS.unpack_from(view, offset)
        offset += DIMS.size
        if rows == 0 or cols == 0:
            raise WireFormatError(f"zero dimension {rows}x{cols}")
        nbytes = rows * cols * ELEMENT_BYTES
        if len(view) < offset + nbytes:
            raise WireFormatError(f"payload shorter than declared {rows}x{cols}")
        m = np.frombuffer(view, dtype=_F8, count=rows * cols, offset=offset).reshape(rows, cols)
        if not np.isfinite(m).all():
            raise WireFormatError("non-finite value in payload")
        matrices.append(m)
        offset += nbytes
    if offset != len(view):
        raise WireFormatError(f"{len(view) - offset} trailing bytes after payload")
    return Envelope(proto, session, step, sender, receiver, tuple(matrices))


def frame(data: bytes) -> bytes:
    return FRAME.pack(len(data)) + data
