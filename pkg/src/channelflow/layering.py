"""Layered decompositions: ordered instance groups plus critical edges.

A layered decomposition orders the instances of a network into groups
``G_1..G_l`` and assigns each instance ``d`` a set ``pi(d)`` of critical edges
on its path. It must satisfy the interference property: whenever ``d1`` in
``G_i`` and ``d2`` in ``G_j`` overlap with ``i <= j``, the path of ``d2``
crosses some edge of ``pi(d1)``.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .decomposition import RootedDecomposition, decomposition_report
from .model import DemandInstance, EdgeRef, Network, slot_edge


@dataclass(frozen=True)
class LayeredDecomposition:
    network_id: int | None
    groups: tuple[tuple[int, ...], ...]
    critical: dict[int, frozenset[EdgeRef]]

    @property
    def length(self) -> int:
        return len(self.groups)

    @property
    def delta(self) -> int:
        return max((len(p) for p in self.critical.values()), default=0)

    def group_of(self) -> dict[int, int]:
        return {d: i for i, group in enumerate(self.groups, 1) for d in group}

    def to_dict(self) -> dict:
        return {
            "net": self.network_id,
            "groups": [list(g) for g in self.groups],
            "critical": {
                str(d): sorted(list(e) for e in pi) for d, pi in sorted(self.critical.items())
            },
            "delta": self.delta,
            "length": self.length,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def capture_node(decomposition: RootedDecomposition, instance: DemandInstance) -> int:
    """``mu(d)``: the least-depth vertex of the instance's path."""
    depth = decomposition.depth
    best = min(depth[v] for v in instance.vertices)
    tops = [v for v in instance.vertices if depth[v] == best]
    assert len(tops) == 1, f"instance {instance.id} captured at several vertices {tops}"
    return tops[0]


def bending_point(network: Network, instance: DemandInstance, u: int) -> int:
    """First vertex of the instance's path reached when walking from ``u``."""
    on_path = instance.vertex_set
    if u in on_path:
        return u
    for x in network.path_vertices(u, instance.vertices[0]):
        if x in on_path:
            return x
    raise AssertionError("walk towards an endpoint always meets the path")


def wings(instance: DemandInstance, y: int) -> frozenset[EdgeRef]:
    """Path edges incident to ``y`` (one at an endpoint, two inside)."""
    try:
        i = instance.vertices.index(y)
    except ValueError:
        raise ValueError(f"vertex {y} is not on the path of instance {instance.id}") from None
    out = []
    if i > 0:
        out.append(instance.edges[i - 1])
    if i < len(instance.edges):
        out.append(instance.edges[i])
    return frozenset(out)


def layer_from_decomposition(
    decomposition: RootedDecomposition,
    network: Network,
    instances: Iterable[DemandInstance],
) -> LayeredDecomposition:
    """Group by capture depth, deepest first; critical edges from wings.

    ``pi(d)`` holds the wings of ``mu(d)`` and the wings of the bending point
    towards every pivot of ``mu(d)``, so ``|pi(d)| <= 2 * (theta + 1)``.
    """
    if decomposition.network_id != network.id:
        raise ValueError("decomposition and network do not match")
    insts = list(instances)
    for d in insts:
        if d.network != network.id:
            raise ValueError(f"instance {d.id} lives on network {d.network}, not {network.id}")
    pivots = decomposition_report(decomposition, network).pivots
    height = decomposition.height
    groups: list[list[int]] = [[] for _ in range(height)]
    critical: dict[int, frozenset[EdgeRef]] = {}
    for d in insts:
        z = capture_node(decomposition, d)
        groups[height - decomposition.depth[z]].append(d.id)
        pi = set(wings(d, z))
        for u in pivots[z]:
            pi |= wings(d, bending_point(network, d, u))
        critical[d.id] = frozenset(pi)
    return LayeredDecomposition(network.id, tuple(tuple(sorted(g)) for g in groups), critical)


def layer_line_by_length(instances: Iterable[DemandInstance]) -> LayeredDecomposition:
    """Length classes ``[2^(i-1) L_min, 2^i L_min)``; ``pi`` = start, middle, end slots."""
    insts = list(instances)
    if not insts:
        raise ValueError("cannot layer an empty instance set")
    lengths = {d.id: d.end - d.start + 1 for d in insts}
    lmin, lmax = min(lengths.values()), max(lengths.values())
    span = 0
    while lmin << span < lmax:
        span += 1
    groups: list[list[int]] = [[] for _ in range(span + 1)]
    critical = {}
    for d in insts:
        groups[(lengths[d.id] // lmin).bit_length() - 1].append(d.id)
        mid = (d.start + d.end) // 2
        critical[d.id] = frozenset(slot_edge(d.network, t) for t in (d.start, mid, d.end))
    return LayeredDecomposition(None, tuple(tuple(sorted(g)) for g in groups), critical)


def check_interference(
    layered: LayeredDecomposition, instances: Sequence[DemandInstance]
) -> tuple[int, int] | None:
    """Exhaustive interference check; returns the first violating ``(d1, d2)``."""
    group = layered.group_of()
    by_edge: dict[EdgeRef, list[int]] = defaultdict(list)
    for d in group:
        for e in instances[d].edges:
            by_edge[e].append(d)
    for d1 in sorted(group):
        pi = layered.critical[d1]
        partners = set()
        for e in instances[d1].edges:
            partners.update(by_edge[e])
        for d2 in sorted(partners):
            if d2 == d1 or group[d2] < group[d1]:
                continue
            if pi.isdisjoint(instances[d2].edge_set):
                return d1, d2
    return None


def merge_layerings(layerings: Iterable[LayeredDecomposition]) -> LayeredDecomposition:
    """Union the k-th groups across networks; lengths may differ."""
    items = list(layerings)
    length = max((lay.length for lay in items), default=0)
    groups: list[set[int]] = [set() for _ in range(length)]
    critical: dict[int, frozenset[EdgeRef]] = {}
    for lay in items:
        for i, g in enumerate(lay.groups):
            groups[i].update(g)
        critical.update(lay.critical)
    return LayeredDecomposition(None, tuple(tuple(sorted(g)) for g in groups), critical)
