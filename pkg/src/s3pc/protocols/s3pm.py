"""Three-party disguised multiplication ``A (n×s, first) · B (s×t, mid) · C (t×m, last)``.

Message schedule inside one sub-protocol block (slot: sender → receiver, payload):

     0  cs    → first  R_a, r_a, St
     1  cs    → mid    R_b, r_b, St
     2  cs    → last   R_c, r_c, St
     3  first → mid    Â = A + R_a
     4  last  → mid    Ĉ = C + R_c
     5  mid   → last   ψ1 = Â·B̂, γ1 = Â·R_b
     6  mid   → first  ψ2 = B̂·Ĉ, γ2 = R_b·Ĉ
     7  mid   → first  B1   (B̂ = B1·B2, full-rank split)
     8  mid   → last   B2
     9  first → mid    T_a, VF_a
    10  first → last   t1 = R_a·B1, VF_a
    11  mid   → first  VF_b
    12  mid   → last   T_b, VF_b
    13  last  → first  VF_c
    14  last  → mid    VF_c
"""

from __future__ import annotations

import numpy as np

from ..matrix import full_rank_decompose
from ..roles import Role
from .context import PartyContext
from .s2pm import receive_bundle

# The split of B̂ only has to multiply back to B̂. Skipping just exactly-zero
# pivots keeps it exact to roundoff; a numerical-rank cut at 1e-8 of the
# largest entry would discard real directions of wide-range operands.
SPLIT_TOL = 0.0


def s3pm_first(ctx: PartyContext, sub: int, mid: Role, last: Role, A: np.ndarray):
    bundle = yield from receive_bundle(ctx, sub, 0)
    R = bundle.R
    yield ctx.send(mid, sub, 3, A + R)
    psi2, gamma2 = yield ctx.recv(mid, sub, 6)
    (B1,) = yield ctx.recv(mid, sub, 7)

    base = A @ psi2 + R @ gamma2
    V = ctx.random_share(base.shape, np.linalg.norm(base))
    VF = base - V
    T_a = VF - bundle.r
    t1 = R @ B1
    V, VF = ctx.tamper(sub, V, VF, bundle.St, lambda v: base - v)
    yield ctx.send(mid, sub, 9, T_a, VF)
    yield ctx.send(last, sub, 10, t1, VF)
    (VF_b,) = yield ctx.recv(mid, sub, 11)
    (VF_c,) = yield ctx.recv(last, sub, 13)
    return ctx.finish(sub, V, VF, bundle.St, [VF_b, VF_c])


def s3pm_mid(ctx: PartyContext, sub: int, first: Role, last: Role, B: np.ndarray):
    bundle = yield from receive_bundle(ctx, sub, 1)
    R = bundle.R
    (A_hat,) = yield ctx.recv(first, sub, 3)
    (C_hat,) = yield ctx.recv(last, sub, 4)

    B_hat = B + R
    gamma1 = A_hat @ R
    yield ctx.send(last, sub, 5, A_hat @ B_hat, gamma1)
    yield ctx.send(first, sub, 6, B_hat @ C_hat, R @ C_hat)
    M_b = gamma1 @ C_hat
    B1, B2 = full_rank_decompose(B_hat, SPLIT_TOL)
    yield ctx.send(first, sub, 7, B1)
    yield ctx.send(last, sub, 8, B2)

    T_a, VF_a = yield ctx.recv(first, sub, 9)
    V = ctx.random_share(M_b.shape, np.linalg.norm(M_b))
    VF = -M_b - V
    T_b = T_a + VF - bundle.r
    V, VF = ctx.tamper(sub, V, VF, bundle.St, lambda v: -M_b - v)
    yield ctx.send(first, sub, 11, VF)
    yield ctx.send(last, sub, 12, T_b, VF)
    (VF_c,) = yield ctx.recv(last, sub, 14)
    return ctx.finish(sub, V, VF, bundle.St, [VF_a, VF_c])


def s3pm_last(ctx: PartyContext, sub: int, first: Role, mid: Role, C: np.ndarray):
    bundle = yield from receive_bundle(ctx, sub, 2)
    R = bundle.R
    yield ctx.send(mid, sub, 4, C + R)
    psi1, gamma1 = yield ctx.recv(mid, sub, 5)
    (B2,) = yield ctx.recv(mid, sub, 8)
    t1, VF_a = yield ctx.recv(first, sub, 10)
    T_b, VF_b = yield ctx.recv(mid, sub, 12)

    M_c = psi1 @ R
    S_c = gamma1 @ R
    S_b = t1 @ (B2 @ R)
    base = S_c + S_b - M_c
    V = T_b + base - bundle.r
    VF = base - V
    V, VF = ctx.tamper(sub, V, VF, bundle.St, lambda v: base - v)
    yield ctx.send(first, sub, 13, VF)
    yield ctx.send(mid, sub, 14, VF)
    return ctx.finish(sub, V, VF, bundle.St, [VF_a, VF_b])
