"""Per-party protocol state, message ops, and the randomized result check.

Party programs are generators. They ``yield`` a :class:`Send` or :class:`Recv`
op and the driver resumes them with ``None`` or the received matrices. Nested
protocols compose with ``yield from``. Step ids are ``sub * STEP_STRIDE + slot``,
so each sub-protocol of a composite session owns a disjoint block of steps.
"""

from __future__ import annotations

import time
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from ..matrix import DynamicRange, Matrix, bernoulli_vector, gen_dynamic_uniform
from ..roles import Role

STEP_STRIDE = 32


@dataclass(frozen=True)
class Send:
    dst: Role
    step: int
    matrices: tuple


@dataclass(frozen=True)
class Recv:
    src: Role
    step: int


@dataclass(frozen=True)
class VerifyConfig:
    rounds: int = 20
    eps_rel: float = 1e-6
    enabled: bool = True

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError(f"verification needs at least one round, got {self.rounds}")
        if not self.eps_rel > 0:
            raise ValueError(f"eps_rel must be positive, got {self.eps_rel}")


@dataclass(frozen=True)
class Share:
    """One party's output of a single multiplication: result share, check share, check matrix."""

    V: Matrix
    VF: Matrix
    St: Matrix


@dataclass(frozen=True)
class Verdict:
    sub: int
    role: Role
    accepted: bool
    rounds_run: int
    tolerance: float
    worst: float  # largest |E_r| entry seen before stopping


@dataclass(frozen=True)
class Fault:
    """Additive perturbation injected into one party's V or VF before its VF goes out.

    ``magnitude`` is absolute when given; otherwise it is ``scale`` times the
    party's own tolerance unit ``eps_rel * (|VF| + |St|)``.
    """

    sub: int
    role: Role
    target: str = "V"
    index: tuple[int, int] = (0, 0)
    magnitude: float | None = None
    scale: float = 1e4
    sign: float = 1.0

    def __post_init__(self):
        if self.target not in ("V", "VF"):
            raise ValueError(f"fault target must be 'V' or 'VF', got {self.target!r}")


@dataclass(frozen=True)
class AppliedFault:
    fault: Fault
    magnitude: float


def residual_check(H: Matrix, tolerance: float, rounds: int, rng: np.random.Generator
                   ) -> tuple[bool, int, float]:
    """Probe ``H`` (expected zero) with ``rounds`` random 0/1 vectors.

    Returns (accepted, rounds run, worst entry). Stops at the first round whose
    product has an entry above ``tolerance``.
    """
    worst = 0.0
    for i in range(rounds):
        e = np.abs(H @ bernoulli_vector(H.shape[1], rng))
        peak = float(e.max())
        worst = max(worst, peak)
        if peak > tolerance:
            return False, i + 1, worst
    return True, rounds, worst


def verify_shares(own_vf: Matrix, peer_vfs: list[Matrix], St: Matrix, config: VerifyConfig,
                  rng: np.random.Generator) -> tuple[bool, int, float, float]:
    """Check that all verification shares sum to ``St``; returns (ok, rounds, tolerance, worst)."""
    total = own_vf.copy()
    scale = np.linalg.norm(own_vf)
    for vf in peer_vfs:
        if vf.shape != St.shape:
            return False, 0, 0.0, float("inf")
        total += vf
        scale += np.linalg.norm(vf)
    tolerance = config.eps_rel * (scale + np.linalg.norm(St))
    ok, rounds, worst = residual_check(total - St, tolerance, config.rounds, rng)
    return ok, rounds, float(tolerance), worst


@dataclass
class PartyContext:
    role: Role
    session: int
    rng: np.random.Generator
    verify_rng: np.random.Generator
    drange: DynamicRange = field(default_factory=DynamicRange)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    cond_bound: float = 1e3
    faults: tuple[Fault, ...] = ()
    shares: list[tuple[int, Share]] = field(default_factory=list)
    verdicts: list[Verdict] = field(default_factory=list)
    applied: list[AppliedFault] = field(default_factory=list)
    verify_seconds: float = 0.0

    def send(self, dst: Role, sub: int, slot: int, *matrices: Matrix) -> Send:
        return Send(dst, sub * STEP_STRIDE + slot, matrices)

    def recv(self, src: Role, sub: int, slot: int) -> Recv:
        return Recv(src, sub * STEP_STRIDE + slot)

    def random_share(self, shape: tuple[int, int], target_norm: float) -> Matrix:
        """Dynamic-uniform mask rescaled to the Frobenius norm of the value it hides."""
        u = gen_dynamic_uniform(shape[0], shape[1], self.drange, self.rng)
        if target_norm > 0 and np.isfinite(target_norm):
            u *= target_norm / np.linalg.norm(u)
        return u

    def tamper(self, sub: int, V: Matrix, VF: Matrix, St: Matrix,
               vf_of: Callable[[Matrix], Matrix]) -> tuple[Matrix, Matrix]:
        """Apply any configured faults for ``sub``; ``vf_of`` rebuilds VF from a changed V."""
        for f in self.faults:
            if f.sub != sub or f.role != self.role:
                continue
            mag = f.magnitude
            if mag is None:
                mag = f.scale * self.verify.eps_rel * (np.linalg.norm(VF) + np.linalg.norm(St))
            E = np.zeros_like(V)
            E[f.index[0] % V.shape[0], f.index[1] % V.shape[1]] = f.sign * mag
            if f.target == "V":
                V = V + E
                VF = vf_of(V)
            else:
                VF = VF + E
            self.applied.append(AppliedFault(f, float(mag)))
        return V, VF

    def finish(self, sub: int, V: Matrix, VF: Matrix, St: Matrix, peer_vfs: list[Matrix]) -> Share:
        share = Share(V, VF, St)
        self.shares.append((sub, share))
        if self.verify.enabled:
            t0 = time.perf_counter()
            ok, rounds, tol, worst = verify_shares(VF, peer_vfs, St, self.verify, self.verify_rng)
            self.verify_seconds += time.perf_counter() - t0
            self.verdicts.append(Verdict(sub, self.role, ok, rounds, tol, worst))
        return share
