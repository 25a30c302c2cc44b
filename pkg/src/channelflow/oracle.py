"""Exact optima for small instances and certificate checks against them.

The search branches demand by demand (skip it, or pick one of its
instances), so selecting two copies of a demand is never even considered.
Feasibility goes through :class:`LoadTracker`, the same rule the algorithms
and :func:`check_feasible` use.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .model import UNIT, DemandInstance, LoadTracker, Violation, check_feasible
from .primal_dual import DualState, scale_and_check_dual

DEFAULT_CAP = 24


class OracleCapExceeded(ValueError):
    """The instance set is too large for exhaustive search."""


@dataclass(frozen=True)
class OracleResult:
    profit: Fraction
    selected: tuple[int, ...]
    nodes: int


def _by_demand(instances: Sequence[DemandInstance]) -> list[list[DemandInstance]]:
    groups: dict[int, list[DemandInstance]] = defaultdict(list)
    for d in instances:
        groups[d.demand].append(d)
    ordered = [sorted(g, key=lambda d: (-d.profit, d.id)) for g in groups.values()]
    # Most profitable demands first tightens the incumbent early.
    ordered.sort(key=lambda g: (-g[0].profit, g[0].demand))
    return ordered


def exact_optimum(
    instances: Iterable[DemandInstance], mode: str = UNIT, cap: int = DEFAULT_CAP
) -> OracleResult:
    """Maximum-profit feasible selection by depth-first branch and bound.

    The bound at depth ``i`` is the profit so far plus the best profit of
    every demand not yet decided. Ties keep the first selection found, so the
    result is deterministic.
    """
    insts = list(instances)
    if len(insts) > cap:
        raise OracleCapExceeded(f"{len(insts)} instances exceed the oracle cap of {cap}")
    groups = _by_demand(insts)
    suffix = [Fraction(0)] * (len(groups) + 1)
    for i in range(len(groups) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + groups[i][0].profit

    tracker = LoadTracker(mode)
    best_profit = Fraction(0)
    best: list[int] = []
    current: list[int] = []
    nodes = 0

    def search(i: int, profit: Fraction) -> None:
        nonlocal best_profit, best, nodes
        nodes += 1
        if profit > best_profit:
            best_profit, best = profit, list(current)
        if i == len(groups) or profit + suffix[i] <= best_profit:
            return
        for d in groups[i]:
            if tracker.can_add(d):
                tracker.add(d)
                current.append(d.id)
                search(i + 1, profit + d.profit)
                current.pop()
                tracker.remove(d)
        search(i + 1, profit)

    search(0, Fraction(0))
    return OracleResult(best_profit, tuple(sorted(best)), nodes)


def enumerate_optimum(instances: Iterable[DemandInstance], mode: str = UNIT) -> Fraction:
    """Plain enumeration of every one-per-demand choice; a cross-check only."""
    insts = list(instances)
    if len(insts) > 16:
        raise OracleCapExceeded("plain enumeration is limited to 16 instances")
    groups = _by_demand(insts)
    index = {d.id: k for k, d in enumerate(insts)}
    local = [
        DemandInstance(k, d.demand, d.network, d.vertices, d.edges, d.profit, d.height, d.start, d.end)
        for k, d in enumerate(insts)
    ]
    best = Fraction(0)
    for choice in itertools.product(*[[None, *g] for g in groups]):
        ids = [index[d.id] for d in choice if d is not None]
        report = check_feasible(local, ids, mode)
        if report.ok and report.profit > best:
            best = report.profit
    return best


def certify_ratio(profit: Fraction, optimum: Fraction, bound: Fraction | float) -> Violation | None:
    """``None`` when ``profit * bound >= optimum``, exactly."""
    bound = Fraction(repr(bound)) if isinstance(bound, float) else Fraction(bound)
    if profit * bound >= optimum:
        return None
    return Violation(
        "ratio",
        f"p(S) * {bound} = {profit * bound} falls short of the optimum {optimum}",
        (profit, optimum, bound),
    )


def verify_weak_duality(
    duals: DualState,
    lam: Fraction,
    instances: Iterable[DemandInstance],
    optimum: Fraction,
    mode: str = UNIT,
) -> Violation | None:
    """The duals divided by ``lam`` must be feasible with objective at least Opt."""
    insts = list(instances)
    check = scale_and_check_dual(duals, lam, insts, mode)
    if not check.ok:
        return Violation("dual", f"instance {check.violated} is not {lam}-satisfied", (check.violated,))
    if check.scaled_objective < optimum:
        return Violation(
            "duality",
            f"scaled dual objective {check.scaled_objective} is below the optimum {optimum}",
            (check.scaled_objective, optimum),
        )
    return None
