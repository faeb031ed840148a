"""Preprocessing plans and the commodity-server program.

A plan lists every multiplication a session will run, with its sub-protocol
slot, operand dimensions and the roles holding each operand. It is built from
shapes alone, which is all the commodity server ever sees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..matrix import DynamicRange
from ..preprocess import DimSpec, preprocess_s2pm, preprocess_s3pm
from ..roles import Role
from .context import STEP_STRIDE, Send


@dataclass(frozen=True)
class PlanItem:
    sub: int
    dims: DimSpec
    roles: tuple[Role, ...]  # (left, right) or (first, mid, last)
    drange: DynamicRange | None = None  # mask range override; None = session default

    @property
    def three_party(self) -> bool:
        return len(self.roles) == 3


Plan = list[PlanItem]


# Inversion multiplies the parties' own unit-scale random factors and, last,
# an inverse-scale operand. Masks sized for the inputs would bury those
# operands and cost roughly (mask scale)^2 * |A + B| in relative accuracy.
INVERSION_RANGE = DynamicRange(0)


def plan_s2pm(sub: int, n: int, s: int, m: int, left: Role, right: Role,
              drange: DynamicRange | None = None) -> Plan:
    return [PlanItem(sub, DimSpec.s2pm(n, s, m), (left, right), drange)]


def plan_s3pm(sub: int, n: int, s: int, t: int, m: int,
              first: Role, mid: Role, last: Role) -> Plan:
    return [PlanItem(sub, DimSpec.s3pm(n, s, t, m), (first, mid, last))]


def plan_s2pi(sub: int, n: int, a: Role, b: Role) -> Plan:
    # slot sub+2 carries the single extra message and needs no bundle
    r = INVERSION_RANGE
    return (plan_s2pm(sub, n, n, n, a, b, r) + plan_s2pm(sub + 1, n, n, n, a, b, r)
            + plan_s2pm(sub + 3, n, n, n, b, a, r))


def plan_s2phm(sub: int, n: int, s: int, m: int, a: Role, b: Role) -> Plan:
    return plan_s2pm(sub, n, s, m, a, b) + plan_s2pm(sub + 1, n, s, m, b, a)


def plan_s3phm(sub: int, n: int, s: int, t: int, m: int, a: Role, b: Role, c: Role) -> Plan:
    return (plan_s2pm(sub, n, t, m, a, c) + plan_s2pm(sub + 1, n, t, m, b, c)
            + plan_s3pm(sub + 2, n, s, t, m, a, b, c) + plan_s3pm(sub + 3, n, s, t, m, b, a, c))


def commodity_server(plan: Plan, rng: np.random.Generator, drange: DynamicRange):
    """Emit one bundle per participant of every planned multiplication, then stop."""
    for item in plan:
        item_range = item.drange or drange
        if item.three_party:
            bundles = preprocess_s3pm(item.dims, rng, item_range)
        else:
            bundles = preprocess_s2pm(item.dims, rng, item_range)
        for slot, (role, bundle) in enumerate(zip(item.roles, bundles)):
            yield Send(role, item.sub * STEP_STRIDE + slot, bundle.matrices())
