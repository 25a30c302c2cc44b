"""Problem representation for throughput maximization on tree- and line-networks.

A problem has a vertex set ``1..n``, a list of networks over it, and one demand
per processor. Every demand is expanded into *demand instances*: one copy per
accessible network (tree mode), or one copy per accessible resource and
feasible start slot (line mode). Line mode is modelled as a path network on
vertices ``1..n`` whose edge ``(t, t+1)`` is timeslot ``t``.

All profits and heights are exact :class:`fractions.Fraction` values.
"""

from __future__ import annotations

import json
from collections import defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, Iterator, Mapping, NamedTuple, Sequence

TREE = "tree"
LINE = "line"

UNIT = "unit"
HEIGHT = "height"


class InstanceError(ValueError):
    """Raised when a problem instance violates a structural invariant."""


class EdgeRef(NamedTuple):
    """An edge of a specific network, endpoints stored with ``u < v``."""

    network: int
    u: int
    v: int


def edge_ref(network: int, x: int, y: int) -> EdgeRef:
    return EdgeRef(network, x, y) if x < y else EdgeRef(network, y, x)


def slot_edge(resource: int, slot: int) -> EdgeRef:
    """Timeslot ``slot`` on a line resource is the path edge ``(slot, slot+1)``."""
    return EdgeRef(resource, slot, slot + 1)


@dataclass(frozen=True)
class Violation:
    """Structured description of a failed check."""

    kind: str
    message: str
    witness: tuple = ()


class Network:
    """An undirected tree over the vertices ``1..n``.

    Path queries use an internal BFS rooting at vertex 1; this rooting has
    nothing to do with the tree decompositions built later.
    """

    def __init__(self, id: int, n: int, edges: Iterable[Sequence[int]]):
        self.id = int(id)
        self.n = int(n)
        canon = sorted({(min(a, b), max(a, b)) for a, b in ((int(x), int(y)) for x, y in edges)})
        self.edges: tuple[tuple[int, int], ...] = tuple(canon)
        adj: dict[int, list[int]] = {v: [] for v in range(1, self.n + 1)}
        for a, b in self.edges:
            if a == b:
                raise InstanceError(f"network {self.id}: self-loop at {a}")
            if a not in adj or b not in adj:
                raise InstanceError(f"network {self.id}: edge ({a},{b}) outside 1..{self.n}")
            adj[a].append(b)
            adj[b].append(a)
        self.adj: dict[int, tuple[int, ...]] = {v: tuple(sorted(ns)) for v, ns in adj.items()}
        if len(self.edges) != self.n - 1:
            raise InstanceError(
                f"network {self.id}: {len(self.edges)} edges, a spanning tree needs {self.n - 1}"
            )
        self._parent: dict[int, int] = {}
        self._depth: dict[int, int] = {}
        if self.n:
            self._parent[1] = 0
            self._depth[1] = 0
            queue = deque([1])
            while queue:
                x = queue.popleft()
                for y in self.adj[x]:
                    if y not in self._depth:
                        self._depth[y] = self._depth[x] + 1
                        self._parent[y] = x
                        queue.append(y)
        if len(self._depth) != self.n:
            raise InstanceError(f"network {self.id} is disconnected")

    @classmethod
    def path(cls, id: int, n: int) -> "Network":
        return cls(id, n, [(i, i + 1) for i in range(1, n)])

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    def has_edge(self, x: int, y: int) -> bool:
        return y in self.adj.get(x, ())

    def path_vertices(self, u: int, v: int) -> list[int]:
        """Vertices of the unique ``u``-``v`` path, in order from ``u``."""
        if u not in self._depth or v not in self._depth:
            raise InstanceError(f"network {self.id}: unknown vertex in ({u},{v})")
        left, right = [u], [v]
        a, b = u, v
        while self._depth[a] > self._depth[b]:
            a = self._parent[a]
            left.append(a)
        while self._depth[b] > self._depth[a]:
            b = self._parent[b]
            right.append(b)
        while a != b:
            a = self._parent[a]
            b = self._parent[b]
            left.append(a)
            right.append(b)
        right.pop()
        return left + right[::-1]

    def __repr__(self) -> str:
        return f"Network(id={self.id}, n={self.n})"


def tree_path(network: Network, u: int, v: int) -> list[tuple[int, int]]:
    """Edges of the unique ``u``-``v`` path, each oriented in walking order."""
    if u == v:
        raise InstanceError("a path needs two distinct endpoints")
    vs = network.path_vertices(u, v)
    return list(zip(vs, vs[1:]))


@dataclass(frozen=True)
class Demand:
    id: int
    owner: int
    profit: Fraction
    height: Fraction = Fraction(1)
    u: int | None = None
    v: int | None = None
    rt: int | None = None
    dl: int | None = None
    rho: int | None = None

    @property
    def is_narrow(self) -> bool:
        return self.height <= Fraction(1, 2)


@dataclass(frozen=True)
class DemandInstance:
    """One schedulable copy of a demand on one network (and start slot)."""

    id: int
    demand: int
    network: int
    vertices: tuple[int, ...]
    edges: tuple[EdgeRef, ...]
    profit: Fraction
    height: Fraction
    start: int | None = None
    end: int | None = None

    @cached_property
    def edge_set(self) -> frozenset[EdgeRef]:
        return frozenset(self.edges)

    @cached_property
    def vertex_set(self) -> frozenset[int]:
        return frozenset(self.vertices)

    @property
    def length(self) -> int:
        return len(self.edges)

    @property
    def is_narrow(self) -> bool:
        return self.height <= Fraction(1, 2)


@dataclass(frozen=True)
class Solution:
    selected: tuple[int, ...]
    profit: Fraction

    @classmethod
    def of(cls, instances: Sequence[DemandInstance], ids: Iterable[int]) -> "Solution":
        chosen = tuple(sorted(set(ids)))
        return cls(chosen, sum((instances[i].profit for i in chosen), Fraction(0)))


@dataclass
class ProblemInstance:
    mode: str
    n: int
    networks: tuple[Network, ...]
    access: dict[int, frozenset[int]]
    demands: tuple[Demand, ...]
    network_by_id: dict[int, Network] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.mode not in (TREE, LINE):
            raise InstanceError(f"unknown mode {self.mode!r}")
        self.networks = tuple(sorted(self.networks, key=lambda t: t.id))
        self.demands = tuple(sorted(self.demands, key=lambda a: a.id))
        self.network_by_id = {}
        for net in self.networks:
            if net.id in self.network_by_id:
                raise InstanceError(f"duplicate network id {net.id}")
            if net.n != self.n:
                raise InstanceError(f"network {net.id} spans {net.n} vertices, expected {self.n}")
            self.network_by_id[net.id] = net
        for pid, acc in self.access.items():
            if not acc:
                raise InstanceError(f"processor {pid} has an empty access set")
            missing = set(acc) - set(self.network_by_id)
            if missing:
                raise InstanceError(f"processor {pid} accesses unknown networks {sorted(missing)}")
        owners: dict[int, int] = {}
        seen_ids: set[int] = set()
        for a in self.demands:
            if a.id in seen_ids:
                raise InstanceError(f"duplicate demand id {a.id}")
            seen_ids.add(a.id)
            if a.owner not in self.access:
                raise InstanceError(f"demand {a.id}: unknown owner {a.owner}")
            if a.owner in owners:
                raise InstanceError(f"processor {a.owner} owns demands {owners[a.owner]} and {a.id}")
            owners[a.owner] = a.id
            if a.profit <= 0:
                raise InstanceError(f"demand {a.id}: profit must be positive")
            if not 0 < a.height <= 1:
                raise InstanceError(f"demand {a.id}: height must lie in (0, 1]")
            if self.mode == TREE:
                if a.u is None or a.v is None:
                    raise InstanceError(f"demand {a.id}: tree demands need endpoints u, v")
                if not (1 <= a.u <= self.n and 1 <= a.v <= self.n):
                    raise InstanceError(f"demand {a.id}: endpoint outside 1..{self.n}")
                if a.u == a.v:
                    raise InstanceError(f"demand {a.id}: endpoints coincide")
            else:
                if a.rt is None or a.dl is None or a.rho is None:
                    raise InstanceError(f"demand {a.id}: line demands need rt, dl, rho")
                if a.rho < 1 or a.rt < 1 or a.dl > self.n - 1 or a.rt + a.rho - 1 > a.dl:
                    raise InstanceError(f"demand {a.id}: window [{a.rt},{a.dl}] cannot hold rho={a.rho}")
        unowned = set(self.access) - set(owners)
        if unowned:
            raise InstanceError(f"processors {sorted(unowned)} own no demand")

    @property
    def m(self) -> int:
        return len(self.demands)

    @property
    def r(self) -> int:
        return len(self.networks)

    @property
    def is_unit_height(self) -> bool:
        return all(a.height == 1 for a in self.demands)

    def demand(self, demand_id: int) -> Demand:
        for a in self.demands:
            if a.id == demand_id:
                return a
        raise KeyError(demand_id)

    # -- serialization -------------------------------------------------------

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ProblemInstance":
        mode = data.get("mode", TREE)
        n = int(data["n"])
        networks = []
        for spec in data["networks"]:
            edges = spec.get("edges") or []
            if mode == LINE and not edges:
                networks.append(Network.path(spec["id"], n))
                continue
            net = Network(spec["id"], n, edges)
            if mode == LINE and net.edges != Network.path(spec["id"], n).edges:
                raise InstanceError(f"line resource {net.id} is not the path 1..{n}")
            networks.append(net)
        access = {int(p["id"]): frozenset(int(t) for t in p["access"]) for p in data["processors"]}
        demands = []
        for d in data["demands"]:
            denom = int(d.get("denom", 1))
            if denom <= 0:
                raise InstanceError(f"demand {d['id']}: denom must be positive")
            demands.append(
                Demand(
                    id=int(d["id"]),
                    owner=int(d["owner"]),
                    profit=Fraction(int(d["profit_num"]), denom),
                    height=Fraction(int(d.get("height_num", denom)), denom),
                    u=d.get("u"),
                    v=d.get("v"),
                    rt=d.get("rt"),
                    dl=d.get("dl"),
                    rho=d.get("rho"),
                )
            )
        return cls(mode, n, tuple(networks), access, tuple(demands))

    def to_dict(self) -> dict[str, Any]:
        demands = []
        for a in self.demands:
            denom = _lcm(a.profit.denominator, a.height.denominator)
            row: dict[str, Any] = {"id": a.id, "owner": a.owner}
            if self.mode == TREE:
                row.update(u=a.u, v=a.v)
            else:
                row.update(rt=a.rt, dl=a.dl, rho=a.rho)
            row.update(
                profit_num=int(a.profit * denom),
                height_num=int(a.height * denom),
                denom=denom,
            )
            demands.append(row)
        return {
            "mode": self.mode,
            "n": self.n,
            "networks": [
                {"id": t.id, "edges": [list(e) for e in t.edges]} for t in self.networks
            ],
            "processors": [
                {"id": pid, "access": sorted(acc)} for pid, acc in sorted(self.access.items())
            ],
            "demands": demands,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def load(cls, path: str) -> "ProblemInstance":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())
            fh.write("\n")


def _lcm(a: int, b: int) -> int:
    from math import gcd

    return a * b // gcd(a, b)


def expand_demand_instances(problem: ProblemInstance) -> list[DemandInstance]:
    """Expand demands into instances, ordered by (demand, network, start).

    Instance ids are positions in the returned list.
    """
    out: list[DemandInstance] = []
    for a in problem.demands:
        for net_id in sorted(problem.access[a.owner]):
            net = problem.network_by_id[net_id]
            if problem.mode == TREE:
                vs = tuple(net.path_vertices(a.u, a.v))
                edges = tuple(edge_ref(net_id, x, y) for x, y in zip(vs, vs[1:]))
                out.append(DemandInstance(len(out), a.id, net_id, vs, edges, a.profit, a.height))
            else:
                for s in range(a.rt, a.dl - a.rho + 2):
                    e = s + a.rho - 1
                    vs = tuple(range(s, e + 2))
                    edges = tuple(slot_edge(net_id, t) for t in range(s, e + 1))
                    out.append(
                        DemandInstance(len(out), a.id, net_id, vs, edges, a.profit, a.height, s, e)
                    )
    return out


def overlapping(d1: DemandInstance, d2: DemandInstance) -> bool:
    return d1.network == d2.network and not d1.edge_set.isdisjoint(d2.edge_set)


def conflicting(d1: DemandInstance, d2: DemandInstance) -> bool:
    return d1.demand == d2.demand or overlapping(d1, d2)


def instances_by_edge(instances: Iterable[DemandInstance]) -> dict[EdgeRef, list[int]]:
    index: dict[EdgeRef, list[int]] = defaultdict(list)
    for d in instances:
        for e in d.edges:
            index[e].append(d.id)
    return index


def conflict_neighbors(
    instances: Sequence[DemandInstance], ids: Iterable[int] | None = None
) -> dict[int, set[int]]:
    """Adjacency of the conflict graph restricted to ``ids`` (all when None)."""
    chosen = [instances[i] for i in ids] if ids is not None else list(instances)
    adj: dict[int, set[int]] = {d.id: set() for d in chosen}
    by_demand: dict[int, list[int]] = defaultdict(list)
    for d in chosen:
        by_demand[d.demand].append(d.id)
    for group in by_demand.values():
        for i in group:
            adj[i].update(x for x in group if x != i)
    for group in instances_by_edge(chosen).values():
        for i in group:
            adj[i].update(x for x in group if x != i)
    return adj


class LoadTracker:
    """Incremental feasibility for a growing selection.

    In unit mode every instance occupies its edges fully; in height mode it
    occupies ``h(d)`` of each unit-capacity edge. One instance per demand.
    """

    def __init__(self, mode: str = UNIT):
        if mode not in (UNIT, HEIGHT):
            raise ValueError(f"unknown feasibility mode {mode!r}")
        self.mode = mode
        self.load: dict[EdgeRef, Fraction] = defaultdict(Fraction)
        self.demands: set[int] = set()

    def weight(self, d: DemandInstance) -> Fraction:
        return Fraction(1) if self.mode == UNIT else d.height

    def violation(self, d: DemandInstance) -> Violation | None:
        if d.demand in self.demands:
            return Violation("demand", f"demand {d.demand} already selected", (d.id, d.demand))
        w = self.weight(d)
        for e in d.edges:
            if self.load[e] + w > 1:
                return Violation(
                    "capacity", f"edge {tuple(e)} over capacity with instance {d.id}", (d.id, e)
                )
        return None

    def can_add(self, d: DemandInstance) -> bool:
        return self.violation(d) is None

    def add(self, d: DemandInstance) -> None:
        self.demands.add(d.demand)
        w = self.weight(d)
        for e in d.edges:
            self.load[e] += w

    def remove(self, d: DemandInstance) -> None:
        self.demands.discard(d.demand)
        w = self.weight(d)
        for e in d.edges:
            self.load[e] -= w


@dataclass(frozen=True)
class FeasibilityReport:
    ok: bool
    profit: Fraction
    violations: tuple[Violation, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def check_feasible(
    instances: Sequence[DemandInstance],
    solution: Solution | Iterable[int],
    mode: str = UNIT,
    problem: ProblemInstance | None = None,
) -> FeasibilityReport:
    """Check every solution invariant; collects violations instead of raising."""
    ids = solution.selected if isinstance(solution, Solution) else tuple(solution)
    violations: list[Violation] = []
    if len(set(ids)) != len(ids):
        violations.append(Violation("duplicate", "instance selected twice", tuple(ids)))
    tracker = LoadTracker(mode)
    profit = Fraction(0)
    for i in sorted(set(ids)):
        if not 0 <= i < len(instances):
            violations.append(Violation("unknown", f"no instance with id {i}", (i,)))
            continue
        d = instances[i]
        if problem is not None:
            owner = problem.demand(d.demand).owner
            if d.network not in problem.access[owner]:
                violations.append(
                    Violation("access", f"network {d.network} not accessible to {owner}", (d.id,))
                )
        bad = tracker.violation(d)
        if bad is not None:
            violations.append(bad)
        tracker.add(d)
        profit += d.profit
    if isinstance(solution, Solution) and solution.profit != profit and not violations:
        violations.append(Violation("profit", "declared profit does not match selection", ()))
    return FeasibilityReport(not violations, profit, tuple(violations))


def validate_problem(data: Mapping[str, Any]) -> Violation | None:
    """Parse and validate raw instance data; ``None`` when it is well-formed."""
    try:
        problem = ProblemInstance.from_dict(data)
        expand_demand_instances(problem)
    except (InstanceError, KeyError, TypeError) as exc:
        return Violation("instance", str(exc))
    return None


def iter_pairs(items: Sequence[Any]) -> Iterator[tuple[Any, Any]]:
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            yield items[i], items[j]
