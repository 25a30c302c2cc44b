"""Dual bookkeeping and the two-phase primal-dual framework.

The dual has one variable ``alpha(a)`` per demand and ``beta(e)`` per edge.
The dual constraint of instance ``d`` reads

* unit form:   ``alpha(a_d) + sum_{e on d} beta(e) >= p(d)``
* height form: ``alpha(a_d) + h(d) * sum_{e on d} beta(e) >= p(d)``

The first phase raises unsatisfied instances, pushing each batch on a stack;
the second phase pops the stack and keeps whatever stays feasible. All
arithmetic is exact.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .decomposition import build_root_fixing
from .layering import capture_node, wings
from .model import (
    HEIGHT,
    UNIT,
    DemandInstance,
    EdgeRef,
    LoadTracker,
    ProblemInstance,
    Solution,
    conflicting,
    expand_demand_instances,
)

Tuple3 = tuple[int, int, int]

UNIT_MODE = "unit"
NARROW_MODE = "narrow"
WIDE_MODE = "wide"


class StepCapExceeded(RuntimeError):
    """A stage needed more steps than the kill-chain bound allows."""


@dataclass
class DualState:
    alpha: dict[int, Fraction] = field(default_factory=lambda: defaultdict(Fraction))
    beta: dict[EdgeRef, Fraction] = field(default_factory=lambda: defaultdict(Fraction))

    def path_beta(self, d: DemandInstance) -> Fraction:
        return sum((self.beta.get(e, Fraction(0)) for e in d.edges), Fraction(0))

    def objective(self) -> Fraction:
        return sum(self.alpha.values(), Fraction(0)) + sum(self.beta.values(), Fraction(0))

    def snapshot(self) -> tuple[dict[int, Fraction], dict[EdgeRef, Fraction]]:
        """Plain dicts without zero entries, for comparisons."""
        return (
            {k: v for k, v in sorted(self.alpha.items()) if v},
            {k: v for k, v in sorted(self.beta.items()) if v},
        )


@dataclass(frozen=True)
class RaiseRecord:
    instance: int
    delta: Fraction
    pi: tuple[EdgeRef, ...]
    tuple: Tuple3

    def to_dict(self) -> dict:
        f1, f2, f3 = self.tuple
        return {
            "f1": f1,
            "f2": f2,
            "f3": f3,
            "instance": self.instance,
            "delta_num": self.delta.numerator,
            "delta_den": self.delta.denominator,
            "pi": [list(e) for e in self.pi],
        }


@dataclass(frozen=True)
class StackEntry:
    tuple: Tuple3
    records: tuple[RaiseRecord, ...]


def constraint_form(mode: str) -> str:
    """The dual constraint used by an algorithm mode."""
    return HEIGHT if mode in (HEIGHT, NARROW_MODE) else UNIT


def lhs(d: DemandInstance, duals: DualState, mode: str = UNIT) -> Fraction:
    total = duals.path_beta(d)
    if constraint_form(mode) == HEIGHT:
        total *= d.height
    return duals.alpha.get(d.demand, Fraction(0)) + total


def slackness(d: DemandInstance, duals: DualState, mode: str = UNIT) -> Fraction:
    return d.profit - lhs(d, duals, mode)


def xi_satisfied(d: DemandInstance, duals: DualState, level: Fraction, mode: str = UNIT) -> bool:
    return lhs(d, duals, mode) >= level * d.profit


def _check_pi(d: DemandInstance, pi: Iterable[EdgeRef]) -> tuple[EdgeRef, ...]:
    edges = tuple(sorted(set(pi)))
    if not edges:
        raise ValueError(f"instance {d.id}: empty critical set")
    if not d.edge_set.issuperset(edges):
        raise ValueError(f"instance {d.id}: critical edges must lie on its path")
    return edges


def raise_unit(
    d: DemandInstance,
    pi: Iterable[EdgeRef],
    duals: DualState,
    tuple: Tuple3 = (0, 0, 0),
    raise_alpha: bool = True,
) -> RaiseRecord:
    """Make the unit constraint of ``d`` tight.

    ``delta = s / (|pi| + 1)`` goes to ``alpha(a_d)`` and to every critical
    edge. With ``raise_alpha=False`` only the edges are raised, by
    ``s / |pi|`` each.
    """
    edges = _check_pi(d, pi)
    s = slackness(d, duals, UNIT)
    if s <= 0:
        raise ValueError(f"instance {d.id} is already satisfied (slack {s})")
    delta = s / (len(edges) + 1) if raise_alpha else s / len(edges)
    if raise_alpha:
        duals.alpha[d.demand] += delta
    for e in edges:
        duals.beta[e] += delta
    return RaiseRecord(d.id, delta, edges, tuple)


def raise_height(
    d: DemandInstance, pi: Iterable[EdgeRef], duals: DualState, tuple: Tuple3 = (0, 0, 0)
) -> RaiseRecord:
    """Make the height constraint of a narrow ``d`` tight.

    ``delta = s / (1 + 2 h |pi|^2)``; ``alpha(a_d)`` gains ``delta`` and every
    critical edge gains ``2 |pi| delta``.
    """
    edges = _check_pi(d, pi)
    if not d.is_narrow:
        raise ValueError(f"instance {d.id} is wide (h = {d.height}); use raise_unit")
    s = slackness(d, duals, HEIGHT)
    if s <= 0:
        raise ValueError(f"instance {d.id} is already satisfied (slack {s})")
    k = len(edges)
    delta = s / (1 + 2 * d.height * k * k)
    duals.alpha[d.demand] += delta
    for e in edges:
        duals.beta[e] += 2 * k * delta
    return RaiseRecord(d.id, delta, edges, tuple)


def record_cost(record: RaiseRecord, mode: str) -> Fraction:
    """Dual objective increase caused by one raise."""
    k = len(record.pi)
    if constraint_form(mode) == HEIGHT:
        return record.delta * (1 + 2 * k * k)
    return record.delta * (1 + k)


def second_phase(
    stack: Sequence[StackEntry], instances: Sequence[DemandInstance], mode: str = UNIT
) -> Solution:
    """Pop batches in reverse raise order, keeping each instance that fits."""
    tracker = LoadTracker(HEIGHT if constraint_form(mode) == HEIGHT else UNIT)
    chosen = []
    for entry in reversed(stack):
        for rec in sorted(entry.records, key=lambda r: r.instance):
            d = instances[rec.instance]
            if tracker.can_add(d):
                tracker.add(d)
                chosen.append(d.id)
    return Solution.of(instances, chosen)


@dataclass(frozen=True)
class DualCheck:
    ok: bool
    violated: int | None
    objective: Fraction
    scaled_objective: Fraction

    def __bool__(self) -> bool:
        return self.ok


def scale_and_check_dual(
    duals: DualState, lam: Fraction, instances: Iterable[DemandInstance], mode: str = UNIT
) -> DualCheck:
    """Check every dual constraint after dividing all variables by ``lam``."""
    lam = Fraction(lam)
    if not 0 < lam <= 1:
        raise ValueError("lambda must lie in (0, 1]")
    objective = duals.objective()
    for d in instances:
        if lhs(d, duals, mode) < lam * d.profit:
            return DualCheck(False, d.id, objective, objective / lam)
    return DualCheck(True, None, objective, objective / lam)


def achieved_lambda(duals: DualState, instances: Iterable[DemandInstance], mode: str = UNIT) -> Fraction:
    """Largest ``lambda <= 1`` for which every instance is lambda-satisfied."""
    best = Fraction(1)
    for d in instances:
        ratio = lhs(d, duals, mode) / d.profit
        if ratio < best:
            best = ratio
    return best


def successor_property(
    stack: Sequence[StackEntry], instances: Sequence[DemandInstance], solution: Solution
) -> list[int]:
    """Raised instances with neither themselves nor a conflicting later raise in S.

    Returns the offenders; the second phase guarantees this list is empty.
    """
    order = [rec.instance for entry in stack for rec in entry.records]
    position = {i: k for k, i in enumerate(order)}
    chosen = set(solution.selected)
    bad = []
    for i in order:
        if i in chosen:
            continue
        d = instances[i]
        if not any(position[s] > position[i] and conflicting(d, instances[s]) for s in chosen if s in position):
            bad.append(i)
    return bad


# -- parameters -------------------------------------------------------------


def stage_count(xi: Fraction, epsilon: Fraction) -> int:
    """Smallest ``b`` with ``xi**b <= epsilon``."""
    xi, epsilon = Fraction(xi), Fraction(epsilon)
    if not 0 < xi < 1 or not 0 < epsilon < 1:
        raise ValueError("need 0 < xi < 1 and 0 < epsilon < 1")
    b = max(1, math.floor(_log(epsilon) / _log(xi)) - 1)
    while xi**b > epsilon:
        b += 1
    while b > 1 and xi ** (b - 1) <= epsilon:
        b -= 1
    return b


def _log(x: Fraction) -> float:
    return math.log(x.numerator) - math.log(x.denominator)


def unit_xi(delta: int) -> Fraction:
    """``2 D' / (2 D' + 1)`` with ``D' = delta + 1``: 14/15 for trees, 8/9 for lines."""
    return Fraction(2 * (delta + 1), 2 * (delta + 1) + 1)


def default_narrow_c(delta: int) -> Fraction:
    return Fraction(2 * (1 + 2 * delta * delta))


@dataclass(frozen=True)
class AlgoParams:
    epsilon: Fraction
    mode: str
    delta: int
    xi: Fraction
    stages: int
    h_min: Fraction | None = None
    c_narrow: Fraction | None = None

    @classmethod
    def build(
        cls,
        epsilon: float | Fraction,
        mode: str,
        delta: int,
        h_min: Fraction | None = None,
        c_narrow: Fraction | None = None,
    ) -> "AlgoParams":
        eps = _as_fraction(epsilon)
        if mode in (UNIT_MODE, WIDE_MODE):
            xi = unit_xi(delta)
            return cls(eps, mode, delta, xi, stage_count(xi, eps))
        if mode == NARROW_MODE:
            if h_min is None:
                raise ValueError("narrow mode needs h_min")
            h_min = Fraction(h_min)
            if not 0 < h_min <= Fraction(1, 2):
                raise ValueError("h_min must lie in (0, 1/2]")
            c = Fraction(c_narrow) if c_narrow is not None else default_narrow_c(delta)
            xi = c / (c + h_min)
            return cls(eps, mode, delta, xi, stage_count(xi, eps), h_min, c)
        raise ValueError(f"unknown algorithm mode {mode!r}")

    @property
    def lam(self) -> Fraction:
        return 1 - self.epsilon

    @property
    def form(self) -> str:
        return constraint_form(self.mode)

    @property
    def ratio_bound(self) -> Fraction:
        """The proven guarantee ``(Delta + 1) / lambda`` or ``(1 + 2 Delta^2) / lambda``."""
        if self.form == HEIGHT:
            return (1 + 2 * self.delta * self.delta) / self.lam
        return (self.delta + 1) / self.lam


def _as_fraction(x: float | Fraction | str) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def raise_instance(
    d: DemandInstance, pi: Iterable[EdgeRef], duals: DualState, mode: str, tuple: Tuple3
) -> RaiseRecord:
    if constraint_form(mode) == HEIGHT:
        return raise_height(d, pi, duals, tuple)
    return raise_unit(d, pi, duals, tuple)


def threshold(params: AlgoParams, stage: int) -> Fraction:
    return 1 - params.xi**stage


def worst_slack_ratio(members: Iterable[DemandInstance], duals: DualState, form: str) -> Fraction:
    return max((slackness(d, duals, form) / d.profit for d in members), default=Fraction(0))


def next_active_stage(worst: Fraction, params: AlgoParams, stage: int) -> int | None:
    """First stage ``>= stage`` (and ``<= b``) whose unsatisfied set is non-empty.

    ``d`` is unsatisfied at stage ``j`` iff ``s(d) / p(d) > xi**j``; ``worst``
    is the largest such ratio in the group, and stages before the first ``j``
    with ``xi**j < worst`` have nothing to do.
    """
    if worst <= 0 or params.xi**params.stages >= worst:
        return None
    j = max(stage, math.floor(_log(worst) / _log(params.xi)) - 1)
    while j > stage and params.xi ** (j - 1) < worst:
        j -= 1
    while params.xi**j >= worst:
        j += 1
    return j if j <= params.stages else None


def step_cap(c_steps: float, p_ratio: Fraction) -> int:
    return math.ceil(c_steps * (1 + math.log2(p_ratio)))


ChooseFn = Callable[[Tuple3, list[int]], Iterable[int]]


@dataclass
class FirstPhaseResult:
    duals: DualState
    stack: list[StackEntry]
    steps: dict[tuple[int, int], int]

    @property
    def records(self) -> list[RaiseRecord]:
        return [r for entry in self.stack for r in entry.records]


def first_phase(
    instances: Sequence[DemandInstance],
    groups: Sequence[Iterable[int]],
    critical: Mapping[int, Iterable[EdgeRef]],
    params: AlgoParams,
    choose: ChooseFn,
    max_steps: int | None = None,
) -> FirstPhaseResult:
    """Epoch/stage/step first phase with a pluggable independent-set chooser.

    ``choose(tuple, U)`` must return an independent subset of ``U``; the
    distributed simulator passes its Luby MIS, and a replay passes recorded
    sets.
    """
    duals = DualState()
    stack: list[StackEntry] = []
    steps: dict[tuple[int, int], int] = {}
    for k, group in enumerate(groups, 1):
        members = [instances[i] for i in sorted(group)]
        j = 1
        while True:
            nxt = next_active_stage(worst_slack_ratio(members, duals, params.form), params, j)
            if nxt is None:
                break
            j = nxt
            level = threshold(params, j)
            step = 0
            while True:
                unsat = [d.id for d in members if not xi_satisfied(d, duals, level, params.form)]
                if not unsat:
                    break
                step += 1
                if max_steps is not None and step > max_steps:
                    raise StepCapExceeded(f"epoch {k} stage {j} exceeded {max_steps} steps")
                tup = (k, j, step)
                chosen = sorted(set(choose(tup, unsat)))
                records = tuple(
                    raise_instance(instances[i], critical[i], duals, params.mode, tup) for i in chosen
                )
                stack.append(StackEntry(tup, records))
            steps[(k, j)] = step
            j += 1
    return FirstPhaseResult(duals, stack, steps)


# -- sequential algorithm ----------------------------------------------------


@dataclass
class SequentialResult:
    solution: Solution
    duals: DualState
    stack: list[StackEntry]
    instances: list[DemandInstance]


def sequential_tree_solve(
    problem: ProblemInstance, single_tree_variant: bool = False, mode: str = UNIT
) -> SequentialResult:
    """One raise at a time, deepest capture first, on root-fixing decompositions.

    Each network is rooted at its lowest vertex id. ``pi(d)`` is the wings of
    ``mu(d)``. With ``single_tree_variant`` on a one-network problem, ``alpha``
    is never raised.
    """
    if mode != UNIT:
        raise ValueError("the sequential algorithm handles unit heights only")
    instances = expand_demand_instances(problem)
    no_alpha = single_tree_variant and problem.r == 1
    duals = DualState()
    stack: list[StackEntry] = []
    for t_index, net in enumerate(problem.networks, 1):
        dec = build_root_fixing(net, min(net.vertices))
        members = [d for d in instances if d.network == net.id]
        mu = {d.id: capture_node(dec, d) for d in members}
        order = sorted(members, key=lambda d: (-dec.depth[mu[d.id]], d.id))
        step = 0
        while True:
            d = next((x for x in order if slackness(x, duals, UNIT) > 0), None)
            if d is None:
                break
            step += 1
            tup = (t_index, 1, step)
            rec = raise_unit(d, wings(d, mu[d.id]), duals, tup, raise_alpha=not no_alpha)
            stack.append(StackEntry(tup, (rec,)))
    return SequentialResult(second_phase(stack, instances, UNIT), duals, stack, instances)
