"""Composite protocols built from the two- and three-party multiplications.

Each function is one party's program. Sub-protocol slots are consumed in
increasing order by every participant, so the buffered mailboxes never need
more than the messages already in flight.
"""

from __future__ import annotations

import numpy as np

from ..matrix import gen_nonsingular, invert
from ..roles import Role
from .context import PartyContext
from .s2pm import s2pm_left, s2pm_right
from .s3pm import s3pm_first, s3pm_last, s3pm_mid

# ---------------------------------------------------------------- inversion
# slots: sub (P·A)·Q, sub+1 P·(B·Q), sub+2 one share hand-off, sub+3 (Q·T⁻¹)·P


def s2pi_a(ctx: PartyContext, sub: int, peer: Role, A: np.ndarray):
    P = gen_nonsingular(A.shape[0], ctx.rng, ctx.cond_bound)
    first = yield from s2pm_left(ctx, sub, peer, P @ A)
    second = yield from s2pm_left(ctx, sub + 1, peer, P)
    yield ctx.send(peer, sub + 2, 0, first.V + second.V)
    out = yield from s2pm_right(ctx, sub + 3, peer, P)
    return out.V


def s2pi_b(ctx: PartyContext, sub: int, peer: Role, B: np.ndarray):
    Q = gen_nonsingular(B.shape[0], ctx.rng, ctx.cond_bound)
    first = yield from s2pm_right(ctx, sub, peer, Q)
    second = yield from s2pm_right(ctx, sub + 1, peer, B @ Q)
    (peer_part,) = yield ctx.recv(peer, sub + 2, 0)
    T = peer_part + first.V + second.V
    out = yield from s2pm_left(ctx, sub + 3, peer, Q @ invert(T))
    return out.V


# ------------------------------------------------------ hybrid, two parties
# (A1 + B1)(A2 + B2): local A1·A2 and B1·B2, slot sub A1×B2, slot sub+1 B1×A2


def s2phm_a(ctx: PartyContext, sub: int, peer: Role, A1: np.ndarray, A2: np.ndarray):
    local = A1 @ A2
    cross1 = yield from s2pm_left(ctx, sub, peer, A1)
    cross2 = yield from s2pm_right(ctx, sub + 1, peer, A2)
    return local + cross1.V + cross2.V


def s2phm_b(ctx: PartyContext, sub: int, peer: Role, B1: np.ndarray, B2: np.ndarray):
    local = B1 @ B2
    cross1 = yield from s2pm_right(ctx, sub, peer, B2)
    cross2 = yield from s2pm_left(ctx, sub + 1, peer, B1)
    return local + cross1.V + cross2.V


# ---------------------------------------------------- hybrid, three parties
# (A1 + B1)(A2 + B2)C: slot sub (A1·A2)×C, sub+1 (B1·B2)×C,
# sub+2 A1×B2×C, sub+3 B1×A2×C


def s3phm_a(ctx: PartyContext, sub: int, b: Role, c: Role, A1: np.ndarray, A2: np.ndarray):
    own = yield from s2pm_left(ctx, sub, c, A1 @ A2)
    x1 = yield from s3pm_first(ctx, sub + 2, b, c, A1)
    x2 = yield from s3pm_mid(ctx, sub + 3, b, c, A2)
    return own.V + x1.V + x2.V


def s3phm_b(ctx: PartyContext, sub: int, a: Role, c: Role, B1: np.ndarray, B2: np.ndarray):
    own = yield from s2pm_left(ctx, sub + 1, c, B1 @ B2)
    x1 = yield from s3pm_mid(ctx, sub + 2, a, c, B2)
    x2 = yield from s3pm_first(ctx, sub + 3, a, c, B1)
    return own.V + x1.V + x2.V


def s3phm_c(ctx: PartyContext, sub: int, a: Role, b: Role, C: np.ndarray):
    from_a = yield from s2pm_right(ctx, sub, a, C)
    from_b = yield from s2pm_right(ctx, sub + 1, b, C)
    x1 = yield from s3pm_last(ctx, sub + 2, a, b, C)
    x2 = yield from s3pm_last(ctx, sub + 3, b, a, C)
    return from_a.V + from_b.V + x1.V + x2.V


# --------------------------------------------------------------- regression
# training slots: 0-1 Gram matrix, 2-5 inversion, 6-9 (Gram⁻¹ · Xᵀ) · Y


def train_a(ctx: PartyContext, b: Role, c: Role, X1: np.ndarray):
    gram = yield from s2phm_a(ctx, 0, b, X1.T, X1)
    inv = yield from s2pi_a(ctx, 2, b, gram)
    beta = yield from s3phm_a(ctx, 6, b, c, inv, X1.T)
    return beta


def train_b(ctx: PartyContext, a: Role, c: Role, X2: np.ndarray):
    gram = yield from s2phm_b(ctx, 0, a, X2.T, X2)
    inv = yield from s2pi_b(ctx, 2, a, gram)
    beta = yield from s3phm_b(ctx, 6, a, c, inv, X2.T)
    return beta


def train_c(ctx: PartyContext, a: Role, b: Role, Y: np.ndarray):
    beta = yield from s3phm_c(ctx, 6, a, b, Y)
    return beta


# prediction slots: 0-1 (X1* + X2*)(β1 + β2), 2 X1*×β3, 3 X2*×β3


def predict_a(ctx: PartyContext, b: Role, c: Role, X1: np.ndarray, beta1: np.ndarray):
    y11 = yield from s2phm_a(ctx, 0, b, X1, beta1)
    y12 = yield from s2pm_left(ctx, 2, c, X1)
    return y11 + y12.V


def predict_b(ctx: PartyContext, a: Role, c: Role, X2: np.ndarray, beta2: np.ndarray):
    y21 = yield from s2phm_b(ctx, 0, a, X2, beta2)
    y22 = yield from s2pm_left(ctx, 3, c, X2)
    return y21 + y22.V


def predict_c(ctx: PartyContext, a: Role, b: Role, beta3: np.ndarray):
    y31 = yield from s2pm_right(ctx, 2, a, beta3)
    y32 = yield from s2pm_right(ctx, 3, b, beta3)
    return y31.V + y32.V
