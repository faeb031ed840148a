"""Session runner.

One session = one commodity-server program plus one program per party, all
sharing a session id. The server runs first and delivers every bundle; then
the parties run. On an in-process network a single thread interleaves the
party generators; otherwise each party gets its own thread and blocks on
real receives.
"""

from __future__ import annotations

import itertools
import logging
import threading
import time
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError, TransportError
from ..matrix import DynamicRange, as_matrix, make_rng, matching_range
from ..roles import ProtocolId, Role
from ..transport.ledger import SessionStats
from ..transport.network import InProcNetwork, Network
from ..transport.wire import Envelope
from . import derived
from .context import (
    AppliedFault,
    Fault,
    PartyContext,
    Recv,
    Send,
    Share,
    Verdict,
    VerifyConfig,
)
from .plan import (
    Plan,
    commodity_server,
    plan_s2phm,
    plan_s2pi,
    plan_s2pm,
    plan_s3phm,
    plan_s3pm,
)
from .s2pm import s2pm_left, s2pm_right
from .s3pm import s3pm_first, s3pm_last, s3pm_mid

log = logging.getLogger(__name__)

A, B, C = Role.ALICE, Role.BOB, Role.CAROL

PartyProgram = Callable[[PartyContext], object]


@dataclass
class SessionResult:
    protocol: ProtocolId
    session: int
    outputs: dict[Role, np.ndarray]
    shares: dict[Role, list[tuple[int, Share]]]
    verdicts: list[Verdict]
    applied_faults: list[AppliedFault]
    stats: SessionStats
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        """True when every party accepted every multiplication (vacuously true if unverified)."""
        return all(v.accepted for v in self.verdicts)

    @property
    def detected(self) -> bool:
        return not self.accepted

    def reconstruct(self) -> np.ndarray:
        parts = list(self.outputs.values())
        total = parts[0].copy()
        for p in parts[1:]:
            total += p
        return total


class _Party:
    """Drives one generator; ``pending`` holds the receive it is blocked on."""

    def __init__(self, role: Role, gen):
        self.role = role
        self.gen = gen
        self.pending: Recv | None = None
        self.done = False
        self.result = None

    def advance(self, value, emit: Callable[[Role, Send], None]) -> None:
        """Resume with ``value`` and run until the next receive or completion."""
        try:
            op = self.gen.send(value)
            while isinstance(op, Send):
                emit(self.role, op)
                op = self.gen.send(None)
        except StopIteration as stop:
            self.done, self.result, self.pending = True, stop.value, None
            return
        if not isinstance(op, Recv):
            raise TypeError(f"party program yielded {op!r}")
        self.pending = op


class Engine:
    """Runs protocol sessions over a network and collects shares, verdicts and ledgers.

    ``drange`` fixes the mask range for every session. Left as None, each session
    picks the range matching its operands' largest entry (see ``matching_range``).
    """

    def __init__(self, network: Network | None = None, seed: int = 0,
                 drange: DynamicRange | None = None, verify: VerifyConfig | None = None,
                 cond_bound: float = 1e3, timeout: float = 120.0,
                 threaded: bool | None = None):
        self.network = network if network is not None else InProcNetwork()
        self.seed = seed
        self.drange = drange
        self.verify = verify if verify is not None else VerifyConfig()
        self.cond_bound = cond_bound
        self.timeout = timeout
        self.threaded = (not self.network.cooperative) if threaded is None else threaded
        self._sessions = itertools.count(1)

    # ------------------------------------------------------------ protocols

    def s2pm(self, A_: np.ndarray, B_: np.ndarray, faults: Sequence[Fault] = ()) -> SessionResult:
        A_, B_ = as_matrix(A_, "A"), as_matrix(B_, "B")
        _chain(A_, B_)
        (n, s), m = A_.shape, B_.shape[1]
        return self.run(ProtocolId.S2PM, plan_s2pm(0, n, s, m, A, B), {
            A: lambda ctx: s2pm_left(ctx, 0, B, A_),
            B: lambda ctx: s2pm_right(ctx, 0, A, B_),
        }, faults, operands=(A_, B_))

    def s3pm(self, A_, B_, C_, faults: Sequence[Fault] = ()) -> SessionResult:
        A_, B_, C_ = as_matrix(A_, "A"), as_matrix(B_, "B"), as_matrix(C_, "C")
        _chain(A_, B_, C_)
        (n, s), t, m = A_.shape, B_.shape[1], C_.shape[1]
        return self.run(ProtocolId.S3PM, plan_s3pm(0, n, s, t, m, A, B, C), {
            A: lambda ctx: s3pm_first(ctx, 0, B, C, A_),
            B: lambda ctx: s3pm_mid(ctx, 0, A, C, B_),
            C: lambda ctx: s3pm_last(ctx, 0, A, B, C_),
        }, faults, operands=(A_, B_, C_))

    def s2pi(self, A_, B_, faults: Sequence[Fault] = ()) -> SessionResult:
        A_, B_ = as_matrix(A_, "A"), as_matrix(B_, "B")
        if A_.shape[0] != A_.shape[1] or A_.shape != B_.shape:
            raise ShapeError(f"inversion needs two equal square matrices, got {A_.shape}, {B_.shape}")
        return self.run(ProtocolId.S2PI, plan_s2pi(0, A_.shape[0], A, B), {
            A: lambda ctx: derived.s2pi_a(ctx, 0, B, A_),
            B: lambda ctx: derived.s2pi_b(ctx, 0, A, B_),
        }, faults, operands=(A_, B_))

    def s2phm(self, A1, A2, B1, B2, faults: Sequence[Fault] = ()) -> SessionResult:
        A1, A2 = as_matrix(A1, "A1"), as_matrix(A2, "A2")
        B1, B2 = as_matrix(B1, "B1"), as_matrix(B2, "B2")
        _same(A1, B1), _same(A2, B2), _chain(A1, A2)
        (n, s), m = A1.shape, A2.shape[1]
        return self.run(ProtocolId.S2PHM, plan_s2phm(0, n, s, m, A, B), {
            A: lambda ctx: derived.s2phm_a(ctx, 0, B, A1, A2),
            B: lambda ctx: derived.s2phm_b(ctx, 0, A, B1, B2),
        }, faults, operands=(A1, A2, B1, B2))

    def s3phm(self, A1, A2, B1, B2, C_, faults: Sequence[Fault] = ()) -> SessionResult:
        A1, A2 = as_matrix(A1, "A1"), as_matrix(A2, "A2")
        B1, B2 = as_matrix(B1, "B1"), as_matrix(B2, "B2")
        C_ = as_matrix(C_, "C")
        _same(A1, B1), _same(A2, B2), _chain(A1, A2, C_)
        (n, s), t, m = A1.shape, A2.shape[1], C_.shape[1]
        return self.run(ProtocolId.S3PHM, plan_s3phm(0, n, s, t, m, A, B, C), {
            A: lambda ctx: derived.s3phm_a(ctx, 0, B, C, A1, A2),
            B: lambda ctx: derived.s3phm_b(ctx, 0, A, C, B1, B2),
            C: lambda ctx: derived.s3phm_c(ctx, 0, A, B, C_),
        }, faults, operands=(A1, A2, B1, B2, C_))

    def s3plrt(self, X1, X2, Y, faults: Sequence[Fault] = ()) -> SessionResult:
        """Secure least-squares training; outputs are the three coefficient shares."""
        X1, X2, Y = as_matrix(X1, "X1"), as_matrix(X2, "X2"), as_matrix(Y, "Y")
        _same(X1, X2)
        if Y.shape != (X1.shape[0], 1):
            raise ShapeError(f"labels must be {X1.shape[0]}x1, got {Y.shape}")
        N, m = X1.shape
        plan = plan_s2phm(0, m, N, m, A, B) + plan_s2pi(2, m, A, B) + plan_s3phm(6, m, m, N, 1, A, B, C)
        return self.run(ProtocolId.S3PLRT, plan, {
            A: lambda ctx: derived.train_a(ctx, B, C, X1),
            B: lambda ctx: derived.train_b(ctx, A, C, X2),
            C: lambda ctx: derived.train_c(ctx, A, B, Y),
        }, faults, operands=(X1, X2, Y))

    def s3plrp(self, X1, beta1, X2, beta2, beta3, faults: Sequence[Fault] = ()) -> SessionResult:
        """Secure prediction; outputs are the three prediction shares."""
        X1, X2 = as_matrix(X1, "X1"), as_matrix(X2, "X2")
        b1, b2, b3 = (as_matrix(b, f"beta{i}") for i, b in enumerate((beta1, beta2, beta3), 1))
        _same(X1, X2), _same(b1, b2), _same(b1, b3), _chain(X1, b1)
        n2, m = X1.shape
        plan = plan_s2phm(0, n2, m, 1, A, B) + plan_s2pm(2, n2, m, 1, A, C) + plan_s2pm(3, n2, m, 1, B, C)
        return self.run(ProtocolId.S3PLRP, plan, {
            A: lambda ctx: derived.predict_a(ctx, B, C, X1, b1),
            B: lambda ctx: derived.predict_b(ctx, A, C, X2, b2),
            C: lambda ctx: derived.predict_c(ctx, A, B, b3),
        }, faults, operands=(X1, X2, b1, b2, b3))

    # --------------------------------------------------------------- runner

    def run(self, protocol: ProtocolId, plan: Plan, programs: Mapping[Role, PartyProgram],
            faults: Sequence[Fault] = (), operands: Sequence[np.ndarray] = ()) -> SessionResult:
        session = next(self._sessions)
        drange = self.drange if self.drange is not None else matching_range(*operands)
        self.network.open_session(session)
        contexts = {
            role: PartyContext(role=role, session=session,
                               rng=make_rng(self.seed, session, role, 0),
                               verify_rng=make_rng(self.seed, session, role, 1),
                               drange=drange, verify=self.verify,
                               cond_bound=self.cond_bound, faults=tuple(faults))
            for role in programs
        }

        def emit(sender: Role, op: Send) -> None:
            proto = ProtocolId.CS_BUNDLE if sender == Role.CS else protocol
            self.network.send(Envelope(proto, session, op.step, sender, op.dst, op.matrices))

        t0 = time.perf_counter()
        try:
            cs = _Party(Role.CS, commodity_server(plan, make_rng(self.seed, session, Role.CS),
                                                  drange))
            cs.advance(None, emit)
            if not cs.done:
                raise RuntimeError("commodity server must never wait for a message")
            t1 = time.perf_counter()
            parties = {role: _Party(role, prog(contexts[role])) for role, prog in programs.items()}
            if self.threaded:
                self._run_threaded(session, parties, emit)
            else:
                self._run_cooperative(session, parties, emit)
        except BaseException:
            self.network.discard(session)
            raise
        t2 = time.perf_counter()

        verify_s = max(ctx.verify_seconds for ctx in contexts.values())
        shares = {role: ctx.shares for role, ctx in contexts.items()}
        outs = {role: p.result.V if isinstance(p.result, Share) else p.result
                for role, p in parties.items()}
        return SessionResult(
            protocol=protocol, session=session, outputs=outs, shares=shares,
            verdicts=[v for ctx in contexts.values() for v in ctx.verdicts],
            applied_faults=[f for ctx in contexts.values() for f in ctx.applied],
            stats=self.network.ledger.stats(session),
            timings={"preprocess_ms": 1e3 * (t1 - t0),
                     "online_ms": 1e3 * (t2 - t1 - verify_s),
                     "verify_ms": 1e3 * verify_s},
        )

    def _run_cooperative(self, session: int, parties: dict[Role, _Party], emit) -> None:
        for p in parties.values():
            p.advance(None, emit)
        while True:
            progressed = False
            for p in parties.values():
                while not p.done:
                    env = self.network.try_recv(p.role, session, p.pending.step, p.pending.src)
                    if env is None:
                        break
                    p.advance(env.matrices, emit)
                    progressed = True
            if all(p.done for p in parties.values()):
                return
            if not progressed:
                stuck = {p.role.label: (p.pending.src.label, p.pending.step)
                         for p in parties.values() if not p.done}
                raise TransportError(f"no party can make progress; waiting on {stuck}",
                                     session=session)

    def _run_threaded(self, session: int, parties: dict[Role, _Party], emit) -> None:
        errors: list[tuple[Role, BaseException]] = []
        lock = threading.Lock()

        def body(p: _Party) -> None:
            try:
                p.advance(None, emit)
                while not p.done:
                    env = self.network.recv(p.role, session, p.pending.step, p.pending.src,
                                            self.timeout)
                    p.advance(env.matrices, emit)
            except BaseException as exc:  # noqa: BLE001 - re-raised in the caller
                with lock:
                    errors.append((p.role, exc))
                self.network.abort(session, exc)

        threads = [threading.Thread(target=body, args=(p,), name=f"party-{p.role.label}",
                                    daemon=True) for p in parties.values()]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        if errors:
            # the first failure is the cause; later ones are usually abort fallout
            role, exc = errors[0]
            log.debug("session %d failed at %s: %r", session, role.label, exc)
            raise exc


def _chain(*mats: np.ndarray) -> None:
    for left, right in itertools.pairwise(mats):
        if left.shape[1] != right.shape[0]:
            raise ShapeError(f"cannot chain {left.shape} with {right.shape}")


def _same(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"operand shapes differ: {a.shape} vs {b.shape}")
