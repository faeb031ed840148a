"""``eva`` command line: demos, precision sweeps, tamper trials, communication audit, regression.

Every command prints a JSON report to stdout (and to ``--out`` when given) and
exits 0 only when all of its checks pass. ``EVA_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import bench
from .errors import S3PCError
from .matrix import (
    DynamicRange,
    gen_dynamic_uniform,
    gen_rank_deficient,
    make_rng,
    relative_error,
)
from .protocols.context import VerifyConfig
from .protocols.engine import Engine, SessionResult
from .regression import load_csv, run_pipeline, synthetic_dataset, train_test_split
from .roles import Role
from .transport import InProcNetwork, TcpNetwork, parse_bind
from .transport.network import PARTY_ROLES, Network

log = logging.getLogger("s3pc.cli")

COMMANDS = ("demo", "precision", "tamper", "comm-audit", "regress")
DEMO_TOLERANCE = {"s2pi": 1e-6}  # everything else must reach 1e-10
RRS_LIMIT = 1e-4
LNRE_LIMIT = 1e-6
PREDICTION_LIMIT = 1e-8
TAMPER_ROUNDS = (1, 5, 20)


@dataclass(frozen=True)
class RunConfig:
    command: str
    protocol: str
    dims: tuple[int, int, int, int]  # n, s, t, m
    delta: int
    trials: int
    rounds: int
    seed: int
    transport: str
    bind: tuple[str, ...]
    out: str | None
    csv: str | None
    label: str | None
    ns: tuple[int, ...]
    deltas: tuple[int, ...]
    singular: bool

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"--trials must be at least 1, got {self.trials}")
        if any(d < 1 for d in self.dims):
            raise ValueError(f"dimensions must be positive, got {self.dims}")
        if self.rounds < 1:
            raise ValueError(f"--rounds must be at least 1, got {self.rounds}")
        DynamicRange(self.delta)
        for d in self.deltas:
            DynamicRange(d)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eva", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--protocol", default="s2pm",
                   help=f"one of {', '.join(bench.PROTOCOLS)} (precision/tamper accept 'all')")
    p.add_argument("--n", type=int, default=10, help="square operand size")
    p.add_argument("--dims", type=_int_list, help="n,s,t,m for rectangular demo operands")
    p.add_argument("--delta", type=int, default=None,
                   help="dynamic range exponent (default 4; regress defaults to 0)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--rounds", type=int, default=20, help="verification rounds l")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--transport", choices=("inproc", "tcp"), default="inproc")
    p.add_argument("--bind", action="append", default=[], metavar="ROLE=HOST:PORT",
                   help="TCP endpoint for a party; give all three or none (loopback, ephemeral ports)")
    p.add_argument("--csv", help="regress: header-row CSV file")
    p.add_argument("--label", help="regress: label column name or zero-based index")
    p.add_argument("--out", help="also write the JSON report to this path")
    p.add_argument("--ns", type=_int_list, default=None,
                   help="precision/comm-audit: sizes to sweep (default 10,20,30,40,50 / 10,20)")
    p.add_argument("--deltas", type=_int_list, default=(0, 2, 4, 6, 8, 10),
                   help="precision: dynamic ranges to sweep")
    p.add_argument("--singular", action="store_true",
                   help="demo s2pi: feed a singular A+B to exercise the failure path")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.dims:
        if len(args.dims) != 4:
            raise ValueError(f"--dims needs n,s,t,m, got {args.dims}")
        dims = args.dims
    else:
        dims = (args.n,) * 4
    delta = args.delta if args.delta is not None else (0 if args.command == "regress" else 4)
    if args.label is not None and args.csv is None:
        raise ValueError("--label needs --csv")
    if args.csv is not None and args.label is None:
        raise ValueError("--csv needs --label")
    default_ns = (10, 20) if args.command == "comm-audit" else (10, 20, 30, 40, 50)
    return RunConfig(args.command, args.protocol, tuple(dims), delta, args.trials, args.rounds,
                     args.seed, args.transport, tuple(args.bind), args.out, args.csv, args.label,
                     tuple(args.ns or default_ns), tuple(args.deltas), args.singular)


TWO_PARTY = frozenset({"s2pm", "s2pi", "s2phm"})


def make_network(cfg: RunConfig, roles=PARTY_ROLES) -> Network:
    if cfg.transport == "inproc":
        return InProcNetwork()
    bind = parse_bind(cfg.bind) if cfg.bind else None
    if bind is not None and not set(roles) <= set(bind):
        missing = sorted(r.label for r in set(roles) - set(bind))
        raise ValueError(f"--bind must name every party; missing {', '.join(missing)}")
    if bind is not None:
        bind = {r: a for r, a in bind.items() if r in roles}
    return TcpNetwork(bind, roles=roles)


# ------------------------------------------------------------------ commands

def _demo_inputs(cfg: RunConfig, rng: np.random.Generator):
    n, s, t, m = cfg.dims
    d = DynamicRange(cfg.delta)

    def g(r, c):
        return gen_dynamic_uniform(r, c, d, rng)

    p = cfg.protocol
    if p == "s2pi" and cfg.singular:
        # A + B = 2A exactly, and A has rank n-1
        A = gen_rank_deficient(n, n, rng, d)
        return (A, A.copy()), None
    if p in ("s2pi", "s2pm", "s3pm", "s2phm", "s3phm") and len(set(cfg.dims)) == 1:
        w = bench.make_workload(p, n, d, rng)
        return w.inputs, w.expected
    if p == "s2pm":
        A, B = g(n, s), g(s, m)
        return (A, B), A @ B
    if p == "s3pm":
        A, B, C = g(n, s), g(s, t), g(t, m)
        return (A, B, C), A @ B @ C
    if p == "s2phm":
        A1, A2, B1, B2 = g(n, s), g(s, m), g(n, s), g(s, m)
        return (A1, A2, B1, B2), (A1 + B1) @ (A2 + B2)
    if p == "s3phm":
        A1, A2, B1, B2, C = g(n, s), g(s, t), g(n, s), g(s, t), g(t, m)
        return (A1, A2, B1, B2, C), (A1 + B1) @ (A2 + B2) @ C
    if p == "s2pi":
        raise ValueError("s2pi needs square operands; use --n")
    raise ValueError(f"unknown protocol {p!r}; choose from {', '.join(bench.PROTOCOLS)}")


def _session_report(res: SessionResult) -> dict:
    return {
        "accepted": res.accepted,
        "verdicts": [{"sub": v.sub, "role": v.role.label, "accepted": v.accepted,
                      "rounds_run": v.rounds_run, "tolerance": v.tolerance, "worst": v.worst}
                     for v in res.verdicts],
        "ledger": res.stats.to_dict(),
        "timings_ms": res.timings,
    }


def cmd_demo(cfg: RunConfig) -> tuple[dict, bool]:
    rng = make_rng(cfg.seed, 9)
    inputs, expected = _demo_inputs(cfg, rng)
    roles = (Role.ALICE, Role.BOB) if cfg.protocol in TWO_PARTY else PARTY_ROLES
    with make_network(cfg, roles) as net:
        engine = Engine(network=net, seed=cfg.seed, drange=DynamicRange(cfg.delta),
                        verify=VerifyConfig(rounds=cfg.rounds))
        res = getattr(engine, cfg.protocol)(*inputs)
    if expected is None:
        raise ValueError("singular input was inverted without a diagnostic")
    err = relative_error(res.reconstruct(), expected)
    limit = DEMO_TOLERANCE.get(cfg.protocol, 1e-10)
    report = {"command": "demo", "protocol": cfg.protocol, "dims": list(cfg.dims),
              "delta": cfg.delta, "transport": cfg.transport, "relative_error": err,
              "error_limit": limit, **_session_report(res)}
    return report, res.accepted and err <= limit


def _protocols(cfg: RunConfig, allowed) -> tuple[str, ...]:
    if cfg.protocol == "all":
        return tuple(allowed)
    if cfg.protocol not in allowed:
        raise ValueError(f"{cfg.command} supports {', '.join(allowed)}, not {cfg.protocol!r}")
    return (cfg.protocol,)


def cmd_precision(cfg: RunConfig) -> tuple[dict, bool]:
    protocols = _protocols(cfg, bench.PROTOCOLS)

    def progress(cell):
        log.info("%s n=%d delta=%d mre=%.3g failures=%d", cell.protocol, cell.n, cell.delta,
                 cell.mre, cell.failures)

    cells = bench.precision_sweep(protocols, cfg.ns, cfg.deltas, cfg.trials, cfg.seed, progress)
    report = {"command": "precision", "trials": cfg.trials, "failure_threshold": bench.FAILURE_THRESHOLD,
              "cells": [asdict(c) for c in cells]}
    return report, all(c.failures == 0 for c in cells)


def cmd_tamper(cfg: RunConfig) -> tuple[dict, bool]:
    protocols = _protocols(cfg, ("s2pm", "s3pm"))
    rows = []
    ok = True
    for p in protocols:
        for rounds in TAMPER_ROUNDS:
            r = bench.tamper_trials(p, rounds, cfg.trials, n=cfg.dims[0], seed=cfg.seed,
                                    delta=cfg.delta)
            # l rounds of a check that misses with probability at most 1/2 each
            floor = 1.0 - 0.5 ** rounds
            passed = r.weak_tampers == 0 and (r.detection_rate == 1.0 if rounds >= 20
                                              else r.detection_rate >= floor - 3 * np.sqrt(
                                                  floor * (1 - floor) / r.trials))
            rows.append({**asdict(r), "expected_at_least": floor, "passed": bool(passed)})
            ok &= passed
    return {"command": "tamper", "rows": rows}, ok


def cmd_comm_audit(cfg: RunConfig) -> tuple[dict, bool]:
    factory = (lambda: make_network(cfg)) if cfg.transport == "tcp" else None
    rows = bench.comm_audit(cfg.ns, seed=cfg.seed, network_factory=factory)
    report = {"command": "comm-audit", "transport": cfg.transport,
              "rows": [r.to_dict() for r in rows]}
    for r in rows:
        if not r.passed:
            log.error("%s n=%d: bytes %d expected %d, rounds %d expected %d", r.protocol, r.n,
                      r.observed_bytes, r.expected_bytes, r.observed_rounds, r.expected_rounds)
    return report, all(r.passed for r in rows)


def cmd_regress(cfg: RunConfig) -> tuple[dict, bool]:
    rng = make_rng(cfg.seed, 8)
    if cfg.csv:
        X, y, names = load_csv(cfg.csv, cfg.label)
        source = {"csv": str(cfg.csv), "label": cfg.label, "features": names}
    else:
        X, y, beta_true = synthetic_dataset(rng)
        source = {"synthetic": True, "beta_true": beta_true.tolist()}
    tr, te = train_test_split(len(y), rng)
    with make_network(cfg) as net:
        engine = Engine(network=net, seed=cfg.seed, drange=DynamicRange(cfg.delta),
                        verify=VerifyConfig(rounds=cfg.rounds))
        result = run_pipeline(engine, X[tr], y[tr], X[te], y[te])
    m = result["metrics"]
    checks = {"accepted": result["accepted"], "rrs": m["rrs"] <= RRS_LIMIT}
    if not cfg.csv:
        checks["lnre"] = m["lnre"] <= LNRE_LIMIT
        checks["prediction_deviation"] = result["prediction_deviation"] <= PREDICTION_LIMIT
    report = {"command": "regress", "source": source, "rows": {"train": len(tr), "test": len(te)},
              "delta": cfg.delta, **result, "checks": checks}
    return report, all(checks.values())


HANDLERS = {"demo": cmd_demo, "precision": cmd_precision, "tamper": cmd_tamper,
            "comm-audit": cmd_comm_audit, "regress": cmd_regress}


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, default=float)
    print(text)
    if out:
        Path(out).write_text(text + "\n")


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("EVA_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ValueError as exc:
        parser.error(str(exc))
    try:
        report, ok = HANDLERS[cfg.command](cfg)
    except (S3PCError, ValueError, ArithmeticError, OSError) as exc:
        report, ok = {"command": cfg.command, "error": type(exc).__name__, "message": str(exc)}, False
        log.error("%s: %s", type(exc).__name__, exc)
    report["passed"] = bool(ok)
    _emit(report, cfg.out)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
