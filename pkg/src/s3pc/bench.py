"""Experiment harness behind the CLI: precision sweeps, tamper injection, communication audit."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import asdict, dataclass

import numpy as np

from .errors import SingularMatrixError
from .matrix import (
    DynamicRange,
    gen_dynamic_uniform,
    gen_nonsingular,
    make_rng,
    relative_error,
)
from .protocols.context import Fault, VerifyConfig
from .protocols.engine import Engine, SessionResult
from .roles import Role
from .transport.network import Network

log = logging.getLogger(__name__)

PROTOCOLS = ("s2pm", "s3pm", "s2pi", "s2phm", "s3phm")
LINEAR_PROTOCOLS = ("s2pm", "s3pm", "s2phm", "s3phm")
FAILURE_THRESHOLD = 1e-3

# participants of each elementary multiplication, by sub slot
_PARTICIPANTS = {
    "s2pm": {0: (Role.ALICE, Role.BOB)},
    "s3pm": {0: (Role.ALICE, Role.BOB, Role.CAROL)},
}


# ----------------------------------------------------------------- workloads

@dataclass(frozen=True)
class Workload:
    protocol: str
    inputs: tuple
    expected: np.ndarray


def make_workload(protocol: str, n: int, drange: DynamicRange, rng: np.random.Generator,
                  cond_bound: float = 1e4) -> Workload:
    """Random square operands for ``protocol`` and the plaintext answer."""
    def g():
        return gen_dynamic_uniform(n, n, drange, rng)

    if protocol == "s2pm":
        A, B = g(), g()
        return Workload(protocol, (A, B), A @ B)
    if protocol == "s3pm":
        A, B, C = g(), g(), g()
        return Workload(protocol, (A, B, C), A @ B @ C)
    if protocol == "s2phm":
        A1, A2, B1, B2 = g(), g(), g(), g()
        return Workload(protocol, (A1, A2, B1, B2), (A1 + B1) @ (A2 + B2))
    if protocol == "s3phm":
        A1, A2, B1, B2, C = g(), g(), g(), g(), g()
        return Workload(protocol, (A1, A2, B1, B2, C), (A1 + B1) @ (A2 + B2) @ C)
    if protocol == "s2pi":
        # A carries the dynamic range; B completes it to a sum with bounded condition
        A = g()
        S = gen_nonsingular(n, rng, cond_bound)
        B = (np.linalg.norm(A) / np.linalg.norm(S)) * S - A
        return Workload(protocol, (A, B), np.linalg.inv(A + B))
    raise ValueError(f"unknown protocol {protocol!r}")


def run_workload(engine: Engine, w: Workload, faults=()) -> SessionResult:
    return getattr(engine, w.protocol)(*w.inputs, faults=faults)


def _check(protocol: str) -> None:
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}; choose from {', '.join(PROTOCOLS)}")


# ------------------------------------------------------------------ precision

@dataclass
class PrecisionCell:
    protocol: str
    n: int
    delta: int
    trials: int
    mre: float
    median: float
    failures: int
    failure_rate: float
    rejected: int


def precision_cell(protocol: str, n: int, delta: int, trials: int, seed: int,
                   verify: VerifyConfig | None = None) -> PrecisionCell:
    _check(protocol)
    drange = DynamicRange(delta)
    rng = make_rng(seed, 1, n, delta, PROTOCOLS.index(protocol))
    engine = Engine(seed=seed, drange=drange, verify=verify or VerifyConfig())
    errors, failures, rejected = [], 0, 0
    for _ in range(trials):
        w = make_workload(protocol, n, drange, rng)
        try:
            res = run_workload(engine, w)
        except SingularMatrixError:
            errors.append(1.0)
            failures += 1
            continue
        err = relative_error(res.reconstruct(), w.expected)
        errors.append(err)
        failures += err > FAILURE_THRESHOLD
        rejected += not res.accepted
    return PrecisionCell(protocol, n, delta, trials, float(max(errors)),
                         float(np.median(errors)), int(failures), failures / trials, rejected)


def precision_sweep(protocols, ns, deltas, trials: int, seed: int = 0,
                    progress: Callable[[PrecisionCell], None] | None = None) -> list[PrecisionCell]:
    cells = []
    for p in protocols:
        for delta in deltas:
            for n in ns:
                cell = precision_cell(p, n, delta, trials, seed)
                if progress:
                    progress(cell)
                cells.append(cell)
    return cells


# --------------------------------------------------------------------- tamper

@dataclass
class TamperReport:
    protocol: str
    rounds: int
    trials: int
    detected: int
    detection_rate: float
    weak_tampers: int  # injected below 10x the observed tolerance scale (should be 0)
    min_margin: float  # smallest injected magnitude / tolerance scale


def random_fault(protocol: str, n: int, rng: np.random.Generator, magnitude: float | None = None,
                 scale: float = 1e4) -> Fault:
    parts = _PARTICIPANTS[protocol][0]
    return Fault(sub=0, role=parts[int(rng.integers(len(parts)))],
                 target="V" if rng.integers(2) == 0 else "VF",
                 index=(int(rng.integers(n)), int(rng.integers(n))),
                 magnitude=magnitude, scale=scale,
                 sign=1.0 if rng.integers(2) == 0 else -1.0)


def tamper_trials(protocol: str, rounds: int, trials: int, n: int = 6, seed: int = 0,
                  delta: int = 4, magnitude: float | None = None, scale: float = 1e4) -> TamperReport:
    """One random single-element additive fault per run; count runs where someone rejects."""
    if protocol not in _PARTICIPANTS:
        raise ValueError(f"tamper injection supports {', '.join(_PARTICIPANTS)}, not {protocol!r}")
    drange = DynamicRange(delta)
    rng = make_rng(seed, 2, rounds, PROTOCOLS.index(protocol))
    engine = Engine(seed=seed, drange=drange, verify=VerifyConfig(rounds=rounds))
    detected = weak = 0
    margin = float("inf")
    for _ in range(trials):
        w = make_workload(protocol, n, drange, rng)
        fault = random_fault(protocol, n, rng, magnitude, scale)
        res = run_workload(engine, w, faults=[fault])
        detected += res.detected
        tol = max(v.tolerance for v in res.verdicts)
        for applied in res.applied_faults:
            if applied.magnitude > 0:
                ratio = applied.magnitude / tol
                margin = min(margin, ratio)
                weak += ratio < 10
    return TamperReport(protocol, rounds, trials, detected, detected / trials, weak,
                        margin if margin != float("inf") else 0.0)


# ---------------------------------------------------------------- comm audit

ELEMENT_BYTES = 8

# payload elements and rounds for square operands of size n
CLOSED_FORMS = {
    "s2pm": (lambda n: 11 * n * n, 6),
    "s3pm": (lambda n: 26 * n * n, 15),
    "s2pi": (lambda n: 34 * n * n, 19),
    "s2phm": (lambda n: 22 * n * n, 12),
    "s3phm": (lambda n: 74 * n * n, 42),
    # regression with as many samples as features (n = N = m, design already padded)
    "s3plrt": (lambda n: 76 * n * n + 54 * n, 73),
    "s3plrp": (lambda n: 8 * n * n + 36 * n, 24),
}


@dataclass
class AuditRow:
    protocol: str
    n: int
    expected_bytes: int
    observed_bytes: int
    expected_rounds: int
    observed_rounds: int
    header_bytes: int

    @property
    def passed(self) -> bool:
        return (self.expected_bytes, self.expected_rounds) == (self.observed_bytes, self.observed_rounds)

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def _regression_inputs(n: int, rng: np.random.Generator):
    X = rng.standard_normal((n, n))
    X1, X2 = X.copy(), X.copy()
    X1[:, n // 2:] = 0.0
    X2[:, : n // 2] = 0.0
    return X1, X2, rng.standard_normal((n, 1))


def comm_audit(ns=(10, 20), protocols=tuple(CLOSED_FORMS), seed: int = 0,
               network_factory: Callable[[], Network] | None = None) -> list[AuditRow]:
    rows = []
    for n in ns:
        rng = make_rng(seed, 3, n)
        net = network_factory() if network_factory else None
        try:
            engine = Engine(network=net, seed=seed, drange=DynamicRange(0))
            for p in protocols:
                if p == "s3plrt":
                    res = engine.s3plrt(*_regression_inputs(n, rng))
                elif p == "s3plrp":
                    X1, X2, _ = _regression_inputs(n, rng)
                    betas = [rng.standard_normal((n, 1)) for _ in range(3)]
                    res = engine.s3plrp(X1, betas[0], X2, betas[1], betas[2])
                else:
                    res = run_workload(engine, make_workload(p, n, DynamicRange(0), rng))
                elems, rounds = CLOSED_FORMS[p]
                rows.append(AuditRow(p, n, ELEMENT_BYTES * elems(n), res.stats.payload_bytes,
                                     rounds, res.stats.rounds, res.stats.header_bytes))
        finally:
            if net is not None:
                net.close()
    return rows
