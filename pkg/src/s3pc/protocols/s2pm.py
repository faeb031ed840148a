"""Two-party disguised multiplication ``A (n×s, left) · B (s×m, right)``.

Message schedule inside one sub-protocol block (slot: sender → receiver, payload):

    0  cs    → left   R_a, r_a, St
    1  cs    → right  R_b, r_b, St
    2  left  → right  Â = A + R_a
    3  right → left   B̂ = B + R_b
    4  right → left   VF_b, T
    5  left  → right  VF_a
"""

from __future__ import annotations

import numpy as np

from ..preprocess import PreprocessBundle
from ..roles import Role
from .context import PartyContext

SLOT_BUNDLE_LEFT, SLOT_BUNDLE_RIGHT = 0, 1
SLOT_A_HAT, SLOT_B_HAT, SLOT_VFB_T, SLOT_VFA = 2, 3, 4, 5


def receive_bundle(ctx: PartyContext, sub: int, slot: int):
    R, r, St = yield ctx.recv(Role.CS, sub, slot)
    return PreprocessBundle(R, r, St)


def s2pm_left(ctx: PartyContext, sub: int, peer: Role, A: np.ndarray):
    bundle = yield from receive_bundle(ctx, sub, SLOT_BUNDLE_LEFT)
    yield ctx.send(peer, sub, SLOT_A_HAT, A + bundle.R)
    (B_hat,) = yield ctx.recv(peer, sub, SLOT_B_HAT)
    VF_b, T = yield ctx.recv(peer, sub, SLOT_VFB_T)

    RB = bundle.R @ B_hat
    V = T + bundle.r - RB
    VF = V + RB
    V, VF = ctx.tamper(sub, V, VF, bundle.St, lambda v: v + RB)
    yield ctx.send(peer, sub, SLOT_VFA, VF)
    return ctx.finish(sub, V, VF, bundle.St, [VF_b])


def s2pm_right(ctx: PartyContext, sub: int, peer: Role, B: np.ndarray):
    bundle = yield from receive_bundle(ctx, sub, SLOT_BUNDLE_RIGHT)
    (A_hat,) = yield ctx.recv(peer, sub, SLOT_A_HAT)
    yield ctx.send(peer, sub, SLOT_B_HAT, B + bundle.R)

    AB = A_hat @ B
    V = ctx.random_share(AB.shape, np.linalg.norm(AB))
    VF = V - AB
    T = bundle.r - VF
    V, VF = ctx.tamper(sub, V, VF, bundle.St, lambda v: v - AB)
    yield ctx.send(peer, sub, SLOT_VFB_T, VF, T)
    (VF_a,) = yield ctx.recv(peer, sub, SLOT_VFA)
    return ctx.finish(sub, V, VF, bundle.St, [VF_a])

