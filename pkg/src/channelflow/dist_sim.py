"""Round-accurate simulation of the distributed primal-dual algorithm.

Every processor keeps its own view of the duals it needs: ``alpha`` of its
demand and ``beta`` of the edges its instances cross. A step of the first
phase is: each processor lists its unsatisfied instances, a Luby MIS runs on
the conflict graph, every MIS member's owner raises it and tells the
processors sharing that network. The second phase replays the step tuples
backwards; owners pop matching records, keep what fits and announce the
selection one hop away.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .decomposition import IDEAL, build, decomposition_report
from .layering import (
    LayeredDecomposition,
    layer_from_decomposition,
    layer_line_by_length,
    merge_layerings,
)
from .mis import luby_mis, mis_rng
from .model import (
    HEIGHT,
    LINE,
    UNIT,
    DemandInstance,
    EdgeRef,
    ProblemInstance,
    Solution,
    conflict_neighbors,
    conflicting,
    expand_demand_instances,
)
from .primal_dual import (
    NARROW_MODE,
    UNIT_MODE,
    WIDE_MODE,
    AlgoParams,
    DualState,
    RaiseRecord,
    StackEntry,
    StepCapExceeded,
    Tuple3,
    achieved_lambda,
    next_active_stage,
    step_cap,
    threshold,
)

log = logging.getLogger(__name__)

TREE_DELTA = 6
LINE_DELTA = 3


class HeightBelowMinimum(ValueError):
    """A demand is shorter than the configured ``h_min``."""


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    epsilon: Fraction | float = Fraction(1, 10)
    mode: str = UNIT_MODE
    c_steps: float = 2.0
    h_min: Fraction | None = None
    c_narrow: Fraction | None = None
    delta: int | None = None
    decomposition: str = IDEAL


@dataclass(frozen=True)
class Message:
    sender: int
    receiver: int
    tuple: Tuple3
    kind: str
    instance: int
    delta: Fraction | None = None
    pi: tuple[EdgeRef, ...] = ()

    def structural_bits(self) -> int:
        """Bits for everything except the exact rational ``delta``."""
        ints = [self.instance, *self.tuple]
        for e in self.pi:
            ints.extend(e)
        return 1 + sum(max(1, int(x).bit_length()) for x in ints)

    def delta_bits(self) -> int:
        if self.delta is None:
            return 0
        return self.delta.numerator.bit_length() + self.delta.denominator.bit_length()


def demand_bits(problem: ProblemInstance) -> int:
    """``M``: bits to describe the largest demand (ids, endpoints, profit, height)."""
    net_bits = max(t.id for t in problem.networks).bit_length()
    best = 0
    for a in problem.demands:
        ints = [a.id, a.owner, problem.n, problem.n, a.profit.numerator, a.profit.denominator,
                a.height.numerator, a.height.denominator]
        best = max(best, net_bits + sum(max(1, int(x).bit_length()) for x in ints))
    return best


@dataclass(frozen=True)
class KillViolation:
    tuple: Tuple3
    survivor: int
    killers: tuple[int, ...]


@dataclass
class RoundStats:
    rounds: int = 0
    mis_calls: int = 0
    mis_rounds: int = 0
    exchange_rounds: int = 0
    second_phase_rounds: int = 0
    messages: int = 0
    max_msg_bits: int = 0
    max_delta_bits: int = 0
    epochs: int = 0
    stages_per_epoch: int = 0
    steps: list[dict] = field(default_factory=list)
    kill_checks: int = 0
    kill_violations: list[KillViolation] = field(default_factory=list)
    realizability_violations: int = 0

    @property
    def first_phase_steps(self) -> int:
        return sum(s["steps"] for s in self.steps)

    @property
    def max_stage_steps(self) -> int:
        return max((s["steps"] for s in self.steps), default=0)

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "mis_calls": self.mis_calls,
            "mis_rounds": self.mis_rounds,
            "exchange_rounds": self.exchange_rounds,
            "second_phase_rounds": self.second_phase_rounds,
            "messages": self.messages,
            "max_msg_bits": self.max_msg_bits,
            "max_delta_bits": self.max_delta_bits,
            "epochs": self.epochs,
            "stages_per_epoch": self.stages_per_epoch,
            "steps": list(self.steps),
            "kill_violations": len(self.kill_violations),
        }


@dataclass
class ProcessorState:
    id: int
    demand: int
    access: frozenset[int]
    instances: tuple[int, ...]
    alpha: Fraction = Fraction(0)
    beta: dict[EdgeRef, Fraction] = field(default_factory=dict)
    stack: list[RaiseRecord] = field(default_factory=list)
    known_selected: set[int] = field(default_factory=set)
    inbox: list[Message] = field(default_factory=list)

    def lhs(self, d: DemandInstance, form: str) -> Fraction:
        total = sum((self.beta[e] for e in d.edges), Fraction(0))
        if form == HEIGHT:
            total *= d.height
        return self.alpha + total

    def raise_instance(
        self, d: DemandInstance, pi: Iterable[EdgeRef], form: str, tup: Tuple3
    ) -> RaiseRecord:
        edges = tuple(sorted(pi))
        s = d.profit - self.lhs(d, form)
        assert s > 0, f"processor {self.id} raised satisfied instance {d.id}"
        k = len(edges)
        if form == HEIGHT:
            delta = s / (1 + 2 * d.height * k * k)
            step = 2 * k * delta
        else:
            delta = s / (k + 1)
            step = delta
        self.alpha += delta
        for e in edges:
            self.beta[e] += step
        rec = RaiseRecord(d.id, delta, edges, tup)
        self.stack.append(rec)
        return rec

    def absorb(self, msg: Message, form: str, instances: Sequence[DemandInstance]) -> None:
        if msg.kind == "raise":
            k = len(msg.pi)
            step = 2 * k * msg.delta if form == HEIGHT else msg.delta
            for e in msg.pi:
                if e in self.beta:
                    self.beta[e] += step
        else:
            self.known_selected.add(msg.instance)


def build_communication_graph(problem: ProblemInstance) -> dict[int, set[int]]:
    """Processors are adjacent iff their access sets intersect."""
    procs = sorted(problem.access)
    graph: dict[int, set[int]] = {p: set() for p in procs}
    by_net: dict[int, list[int]] = defaultdict(list)
    for p in procs:
        for t in problem.access[p]:
            by_net[t].append(p)
    for members in by_net.values():
        for p in members:
            graph[p].update(q for q in members if q != p)
    return graph


def build_conflict_graph(
    instances: Sequence[DemandInstance], active: Iterable[int] | None = None
) -> dict[int, set[int]]:
    return conflict_neighbors(instances, active)


@dataclass
class DistResult:
    solution: Solution
    duals: DualState
    stats: RoundStats
    stack: list[StackEntry]
    params: AlgoParams
    layered: LayeredDecomposition
    instances: list[DemandInstance]
    mis_sets: dict[Tuple3, frozenset[int]]
    p_ratio: Fraction

    @property
    def records(self) -> list[RaiseRecord]:
        return [r for e in self.stack for r in e.records]

    @property
    def participants(self) -> list[DemandInstance]:
        return [self.instances[i] for g in self.layered.groups for i in g]

    @property
    def lam(self) -> Fraction:
        return achieved_lambda(self.duals, self.participants, self.params.form)

    def trace_lines(self) -> list[str]:
        import json

        return [json.dumps(r.to_dict(), sort_keys=True) for r in self.records]


class Simulator:
    def __init__(
        self,
        problem: ProblemInstance,
        instances: Sequence[DemandInstance],
        layered: LayeredDecomposition,
        params: AlgoParams,
        config: SimConfig,
    ):
        self.problem = problem
        self.instances = list(instances)
        self.layered = layered
        self.params = params
        self.config = config
        self.form = params.form
        self.stats = RoundStats()
        self.comm = build_communication_graph(problem)
        self.msg_bound = (params.delta + 3) * demand_bits(problem)
        owner_of = {a.id: a.owner for a in problem.demands}
        active = sorted(i for g in layered.groups for i in g)
        self.owner = {i: owner_of[self.instances[i].demand] for i in active}
        mine: dict[int, list[int]] = defaultdict(list)
        for i in active:
            mine[self.owner[i]].append(i)
        self.procs: dict[int, ProcessorState] = {}
        for a in problem.demands:
            ids = tuple(mine.get(a.owner, ()))
            beta = {e: Fraction(0) for i in ids for e in self.instances[i].edges}
            self.procs[a.owner] = ProcessorState(a.owner, a.id, problem.access[a.owner], ids, beta=beta)
        profits = [self.instances[i].profit for i in active]
        self.p_ratio = max(profits) / min(profits) if profits else Fraction(1)
        self.cap = step_cap(config.c_steps, self.p_ratio)
        self.mis_sets: dict[Tuple3, frozenset[int]] = {}
        self.stack: list[StackEntry] = []

    # -- messaging -----------------------------------------------------------

    def _send(self, msg: Message) -> None:
        self.stats.messages += 1
        self.stats.max_msg_bits = max(self.stats.max_msg_bits, msg.structural_bits())
        self.stats.max_delta_bits = max(self.stats.max_delta_bits, msg.delta_bits())
        assert msg.structural_bits() <= self.msg_bound, "message exceeds the O(M) bound"
        self.procs[msg.receiver].inbox.append(msg)

    def _broadcast(self, sender: int, network: int, **payload) -> None:
        for q in sorted(self.comm[sender]):
            if network in self.procs[q].access:
                self._send(Message(sender, q, **payload))

    def _deliver(self) -> None:
        for p in self.procs.values():
            for msg in p.inbox:
                p.absorb(msg, self.form, self.instances)
            p.inbox.clear()

    # -- first phase ---------------------------------------------------------

    def _unsatisfied(self, group: frozenset[int], level: Fraction) -> list[int]:
        out = []
        for p in self.procs.values():
            for i in p.instances:
                if i in group:
                    d = self.instances[i]
                    if p.lhs(d, self.form) < level * d.profit:
                        out.append(i)
        return sorted(out)

    def _worst_ratio(self, group: frozenset[int]) -> Fraction:
        worst = Fraction(0)
        for i in group:
            d = self.instances[i]
            r = (d.profit - self.procs[self.owner[i]].lhs(d, self.form)) / d.profit
            worst = max(worst, r)
        return worst

    def _check_realizable(self, graph: dict[int, set[int]]) -> None:
        for a, nbrs in graph.items():
            for b in nbrs:
                pa, pb = self.owner[a], self.owner[b]
                if pa != pb and pb not in self.comm[pa]:
                    self.stats.realizability_violations += 1

    def _check_kills(self, tup: Tuple3, survivors: list[int], killers: frozenset[int]) -> None:
        for d2 in survivors:
            self.stats.kill_checks += 1
            inst2 = self.instances[d2]
            hits = tuple(sorted(k for k in killers if conflicting(self.instances[k], inst2)))
            if not hits or any(2 * self.instances[k].profit > inst2.profit for k in hits):
                self.stats.kill_violations.append(KillViolation(tup, d2, hits))

    def first_phase(self) -> None:
        params = self.params
        groups = self.layered.groups
        self.stats.epochs = len(groups)
        self.stats.stages_per_epoch = params.stages
        for k, group in enumerate(groups, 1):
            members = frozenset(group)
            j = 1
            while True:
                nxt = next_active_stage(self._worst_ratio(members), params, j)
                if nxt is None:
                    break
                j = nxt
                level = threshold(params, j)
                step = 0
                previous: frozenset[int] | None = None
                while True:
                    unsat = self._unsatisfied(members, level)
                    if previous is not None:
                        self._check_kills((k, j, step), unsat, previous)
                    if not unsat:
                        break
                    step += 1
                    if step > self.cap:
                        raise StepCapExceeded(f"epoch {k} stage {j} exceeded {self.cap} steps")
                    tup = (k, j, step)
                    graph = build_conflict_graph(self.instances, unsat)
                    self._check_realizable(graph)
                    mis = luby_mis(graph, mis_rng(self.config.seed, *tup))
                    self.stats.mis_calls += 1
                    self.stats.mis_rounds += mis.rounds
                    self.mis_sets[tup] = mis.members
                    records = []
                    for i in sorted(mis.members):
                        owner = self.owner[i]
                        rec = self.procs[owner].raise_instance(
                            self.instances[i], self.layered.critical[i], self.form, tup
                        )
                        records.append(rec)
                        self._broadcast(
                            owner,
                            self.instances[i].network,
                            tuple=tup,
                            kind="raise",
                            instance=i,
                            delta=rec.delta,
                            pi=rec.pi,
                        )
                    self._deliver()
                    self.stats.exchange_rounds += 1
                    self.stack.append(StackEntry(tup, tuple(records)))
                    previous = mis.members
                self.stats.steps.append({"epoch": k, "stage": j, "steps": step})
                j += 1

    # -- second phase --------------------------------------------------------

    def _fits(self, p: ProcessorState, d: DemandInstance) -> bool:
        load: dict[EdgeRef, Fraction] = defaultdict(Fraction)
        for i in p.known_selected:
            other = self.instances[i]
            if other.demand == d.demand:
                return False
            if other.network == d.network:
                w = other.height if self.form == HEIGHT else Fraction(1)
                for e in other.edges:
                    load[e] += w
        w = d.height if self.form == HEIGHT else Fraction(1)
        return all(load[e] + w <= 1 for e in d.edges)

    def second_phase(self) -> Solution:
        for entry in reversed(self.stack):
            self.stats.second_phase_rounds += 1
            decided = []
            for pid in sorted(self.procs):
                p = self.procs[pid]
                if p.stack and p.stack[-1].tuple == entry.tuple:
                    rec = p.stack.pop()
                    d = self.instances[rec.instance]
                    if self._fits(p, d):
                        decided.append((p, d))
            for p, d in decided:
                p.known_selected.add(d.id)
                self._broadcast(p.id, d.network, tuple=entry.tuple, kind="select", instance=d.id)
            self._deliver()
        chosen = [
            i for p in self.procs.values() for i in p.known_selected if self.owner.get(i) == p.id
        ]
        return Solution.of(self.instances, chosen)

    def global_duals(self) -> DualState:
        duals = DualState()
        for p in self.procs.values():
            if p.alpha:
                duals.alpha[p.demand] = p.alpha
            for e, v in p.beta.items():
                if v:
                    seen = duals.beta.get(e)
                    assert seen is None or seen == v, f"processors disagree on beta{tuple(e)}"
                    duals.beta[e] = v
        return duals

    def run(self) -> DistResult:
        self.first_phase()
        duals = self.global_duals()
        stack = list(self.stack)
        solution = self.second_phase()
        st = self.stats
        st.rounds = st.mis_rounds + st.exchange_rounds + st.second_phase_rounds
        return DistResult(
            solution, duals, st, stack, self.params, self.layered, self.instances,
            dict(self.mis_sets), self.p_ratio,
        )


# -- pipelines ----------------------------------------------------------------


@dataclass(frozen=True)
class LayeringInfo:
    layered: LayeredDecomposition
    per_network: tuple[LayeredDecomposition, ...]
    theta: int
    depth: int


def prepare_layering(
    problem: ProblemInstance,
    instances: Sequence[DemandInstance],
    active: Iterable[int] | None = None,
    kind: str = IDEAL,
) -> LayeringInfo:
    """Decompose every network and layer the (active) instances."""
    chosen = [instances[i] for i in active] if active is not None else list(instances)
    if problem.mode == LINE:
        if not chosen:
            empty = LayeredDecomposition(None, (), {})
            return LayeringInfo(empty, (), 0, 0)
        lay = layer_line_by_length(chosen)
        return LayeringInfo(lay, (lay,), 0, lay.length)
    per, theta, depth = [], 0, 0
    for net in problem.networks:
        dec = build(net, kind)
        rep = decomposition_report(dec, net)
        theta, depth = max(theta, rep.theta), max(depth, rep.depth)
        per.append(layer_from_decomposition(dec, net, [d for d in chosen if d.network == net.id]))
    return LayeringInfo(merge_layerings(per), tuple(per), theta, depth)


def _nominal_delta(problem: ProblemInstance, config: SimConfig, layered: LayeredDecomposition) -> int:
    base = config.delta if config.delta is not None else (LINE_DELTA if problem.mode == LINE else TREE_DELTA)
    return max(base, layered.delta)


def run_distributed(
    problem: ProblemInstance,
    layerings: LayeredDecomposition | Sequence[LayeredDecomposition],
    config: SimConfig,
    instances: Sequence[DemandInstance] | None = None,
    mode: str | None = None,
    h_min: Fraction | None = None,
) -> DistResult:
    """Run both phases over the instances named by ``layerings``."""
    insts = list(instances) if instances is not None else expand_demand_instances(problem)
    layered = layerings if isinstance(layerings, LayeredDecomposition) else merge_layerings(layerings)
    mode = mode or config.mode
    delta = _nominal_delta(problem, config, layered)
    params = AlgoParams.build(
        config.epsilon, mode, delta, h_min=h_min or config.h_min, c_narrow=config.c_narrow
    )
    log.debug("running %s mode: xi=%s b=%d delta=%d", mode, params.xi, params.stages, delta)
    return Simulator(problem, insts, layered, params, config).run()


def run_unit(problem: ProblemInstance, config: SimConfig | None = None) -> DistResult:
    """Unit-height algorithm: every instance occupies its edges fully."""
    config = config or SimConfig()
    instances = expand_demand_instances(problem)
    info = prepare_layering(problem, instances, kind=config.decomposition)
    return run_distributed(problem, info.layered, config, instances, mode=UNIT_MODE)


@dataclass
class OverallResult:
    solution: Solution
    instances: list[DemandInstance]
    wide: DistResult | None
    narrow: DistResult | None
    choice: dict[int, str]
    h_min: Fraction | None

    @property
    def stats(self) -> RoundStats:
        merged = RoundStats()
        for part in (self.wide, self.narrow):
            if part is None:
                continue
            s = part.stats
            merged.rounds += s.rounds
            merged.mis_calls += s.mis_calls
            merged.mis_rounds += s.mis_rounds
            merged.exchange_rounds += s.exchange_rounds
            merged.second_phase_rounds += s.second_phase_rounds
            merged.messages += s.messages
            merged.max_msg_bits = max(merged.max_msg_bits, s.max_msg_bits)
            merged.max_delta_bits = max(merged.max_delta_bits, s.max_delta_bits)
            merged.epochs = max(merged.epochs, s.epochs)
            merged.stages_per_epoch = max(merged.stages_per_epoch, s.stages_per_epoch)
            merged.steps.extend(dict(x, side="wide" if part is self.wide else "narrow") for x in s.steps)
            merged.kill_checks += s.kill_checks
            merged.kill_violations.extend(s.kill_violations)
        return merged


def run_overall_height(problem: ProblemInstance, config: SimConfig | None = None) -> OverallResult:
    """Wide instances through the unit algorithm, narrow ones through the height
    algorithm; per network keep whichever side earns more."""
    config = config or SimConfig()
    instances = expand_demand_instances(problem)
    if config.h_min is not None:
        low = [a.id for a in problem.demands if a.height < config.h_min]
        if low:
            raise HeightBelowMinimum(f"demands {low} are below h_min = {config.h_min}")
    wide_ids = [d.id for d in instances if not d.is_narrow]
    narrow_ids = [d.id for d in instances if d.is_narrow]
    h_min = config.h_min
    if h_min is None and narrow_ids:
        h_min = min(instances[i].height for i in narrow_ids)

    wide = narrow = None
    if wide_ids:
        info = prepare_layering(problem, instances, wide_ids, kind=config.decomposition)
        wide = run_distributed(problem, info.layered, config, instances, mode=WIDE_MODE)
    if narrow_ids:
        info = prepare_layering(problem, instances, narrow_ids, kind=config.decomposition)
        narrow = run_distributed(
            problem, info.layered, config, instances, mode=NARROW_MODE, h_min=h_min
        )

    chosen: list[int] = []
    choice: dict[int, str] = {}
    for net in problem.networks:
        sides = {}
        for name, part in (("wide", wide), ("narrow", narrow)):
            ids = [i for i in part.solution.selected if instances[i].network == net.id] if part else []
            sides[name] = (sum((instances[i].profit for i in ids), Fraction(0)), ids)
        pick = "wide" if sides["wide"][0] >= sides["narrow"][0] else "narrow"
        choice[net.id] = pick
        chosen.extend(sides[pick][1])
    return OverallResult(Solution.of(instances, chosen), instances, wide, narrow, choice, h_min)


def round_budget(result: DistResult) -> float:
    """``2 * l_max * b * (2 + log2(p_max / p_min))``."""
    return 2 * result.layered.length * result.params.stages * (2 + math.log2(result.p_ratio))
