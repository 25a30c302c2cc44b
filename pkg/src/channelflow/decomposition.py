"""Tree decompositions of a network: root-fixing, balancing and ideal.

A tree decomposition ``H`` of a network ``T`` is a rooted tree on the same
vertices such that (i) every ``T``-path between ``x`` and ``y`` passes
through ``LCA_H(x, y)`` and (ii) every subtree ``C(z)`` of ``H`` induces a
connected subtree of ``T``. Its quality is measured by the depth of ``H`` and
by the pivot size: the largest number of ``T``-neighbours of any ``C(z)``.

All builders are deterministic (lowest-id balancer, children ordered by the
minimum vertex of their subtree) and iterative, so deep recursions never hit
the interpreter stack limit.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

from .model import Network, Violation

ROOT_FIXING = "root_fixing"
BALANCING = "balancing"
IDEAL = "ideal"


@dataclass(frozen=True)
class RootedDecomposition:
    network_id: int
    kind: str
    root: int
    parent: dict[int, int | None]
    depth: dict[int, int] = field(compare=False)

    @classmethod
    def from_parents(
        cls, network_id: int, kind: str, parent: dict[int, int | None]
    ) -> "RootedDecomposition":
        roots = [v for v, p in parent.items() if p is None]
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root, found {roots}")
        children: dict[int, list[int]] = {v: [] for v in parent}
        for v, p in parent.items():
            if p is not None:
                children[p].append(v)
        depth = {roots[0]: 1}
        queue = deque([roots[0]])
        while queue:
            x = queue.popleft()
            for c in children[x]:
                depth[c] = depth[x] + 1
                queue.append(c)
        if len(depth) != len(parent):
            raise ValueError("parent map contains a cycle or unreachable vertices")
        return cls(network_id, kind, roots[0], dict(parent), depth)

    @property
    def height(self) -> int:
        """Depth of the deepest vertex (the root has depth 1)."""
        return max(self.depth.values())

    @cached_property
    def children(self) -> dict[int, tuple[int, ...]]:
        kids: dict[int, list[int]] = {v: [] for v in self.parent}
        for v, p in self.parent.items():
            if p is not None:
                kids[p].append(v)
        low = self._subtree_min
        return {v: tuple(sorted(ks, key=lambda c: low[c])) for v, ks in kids.items()}

    @cached_property
    def _subtree_min(self) -> dict[int, int]:
        low = {v: v for v in self.parent}
        for v in sorted(self.parent, key=lambda x: -self.depth[x]):
            p = self.parent[v]
            if p is not None and low[v] < low[p]:
                low[p] = low[v]
        return low

    @cached_property
    def _euler(self) -> tuple[dict[int, int], dict[int, int]]:
        tin: dict[int, int] = {}
        tout: dict[int, int] = {}
        clock = 0
        stack = [(self.root, False)]
        while stack:
            v, done = stack.pop()
            if done:
                tout[v] = clock
                continue
            tin[v] = clock
            clock += 1
            stack.append((v, True))
            stack.extend((c, False) for c in reversed(self.children[v]))
        return tin, tout

    def is_ancestor_or_self(self, a: int, x: int) -> bool:
        tin, tout = self._euler
        return tin[a] <= tin[x] and tout[x] <= tout[a]

    def lca(self, x: int, y: int) -> int:
        while self.depth[x] > self.depth[y]:
            x = self.parent[x]
        while self.depth[y] > self.depth[x]:
            y = self.parent[y]
        while x != y:
            x = self.parent[x]
            y = self.parent[y]
        return x

    def component(self, z: int) -> set[int]:
        """``C(z)``: ``z`` together with all of its descendants."""
        out = {z}
        stack = [z]
        while stack:
            x = stack.pop()
            for c in self.children[x]:
                out.add(c)
                stack.append(c)
        return out

    def to_dict(self, report: "DecompositionReport | None" = None) -> dict:
        data = {
            "net": self.network_id,
            "kind": self.kind,
            "root": self.root,
            "parent": {str(v): p for v, p in sorted(self.parent.items()) if p is not None},
        }
        if report is not None:
            data["report"] = {"depth": report.depth, "theta": report.theta}
        return data

    def dumps(self, report: "DecompositionReport | None" = None) -> str:
        return json.dumps(self.to_dict(report), sort_keys=True)


@dataclass(frozen=True)
class DecompositionReport:
    depth: int
    theta: int
    pivots: dict[int, frozenset[int]]


def neighborhood(network: Network, component: Iterable[int]) -> set[int]:
    """Vertices outside ``component`` adjacent to some vertex inside it."""
    comp = component if isinstance(component, (set, frozenset)) else set(component)
    return {y for x in comp for y in network.adj[x] if y not in comp}


def find_balancer(network: Network, component: Iterable[int]) -> int:
    """Lowest-id vertex whose removal leaves parts of size at most ``|C| // 2``."""
    comp = component if isinstance(component, (set, frozenset)) else set(component)
    if not comp:
        raise ValueError("cannot balance an empty component")
    start = min(comp)
    order = [start]
    parent = {start: 0}
    i = 0
    while i < len(order):
        x = order[i]
        i += 1
        for y in network.adj[x]:
            if y in comp and y not in parent:
                parent[y] = x
                order.append(y)
    if len(order) != len(comp):
        raise ValueError("component is not connected in the network")
    size = dict.fromkeys(order, 1)
    biggest = dict.fromkeys(order, 0)
    for x in reversed(order):
        p = parent[x]
        if p:
            size[p] += size[x]
            if size[x] > biggest[p]:
                biggest[p] = size[x]
    total = len(order)
    half = total // 2
    best = None
    for x in order:
        if max(biggest[x], total - size[x]) <= half and (best is None or x < best):
            best = x
    assert best is not None, "every tree has a balancer"
    return best


def split_component(network: Network, component: Iterable[int], z: int) -> list[frozenset[int]]:
    """Parts of ``component - {z}``, ordered by minimum vertex id."""
    comp = component if isinstance(component, (set, frozenset)) else set(component)
    if z not in comp:
        raise ValueError(f"vertex {z} is not in the component")
    parts = []
    for start in network.adj[z]:
        if start not in comp:
            continue
        part = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for y in network.adj[x]:
                if y != z and y in comp and y not in part:
                    part.add(y)
                    stack.append(y)
        parts.append(frozenset(part))
    parts.sort(key=min)
    return parts


def build_root_fixing(network: Network, root: int = 1) -> RootedDecomposition:
    if root not in network.adj:
        raise ValueError(f"root {root} is not a vertex of network {network.id}")
    parent: dict[int, int | None] = {root: None}
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for y in network.adj[x]:
            if y not in parent:
                parent[y] = x
                queue.append(y)
    return RootedDecomposition.from_parents(network.id, ROOT_FIXING, parent)


def build_balancing(network: Network) -> RootedDecomposition:
    parent: dict[int, int | None] = {}
    work: deque[tuple[frozenset[int], int | None]] = deque([(frozenset(network.vertices), None)])
    while work:
        comp, above = work.popleft()
        z = find_balancer(network, comp)
        parent[z] = above
        for part in split_component(network, comp, z):
            work.append((part, z))
    return RootedDecomposition.from_parents(network.id, BALANCING, parent)


def _attachment(network: Network, outside: int, comp: frozenset[int]) -> int:
    """The unique vertex of a component adjacent to an outside neighbour."""
    (x,) = [y for y in network.adj[outside] if y in comp]
    return x


def find_junction(network: Network, component: Iterable[int], u1p: int, u2p: int, z: int) -> int:
    """Meeting vertex of the paths between ``u1p``, ``u2p`` and ``z``.

    ``u1p`` and ``u2p`` must lie in ``component`` and ``z`` outside it; the
    junction is then the unique vertex of the component common to all three
    pairwise paths.
    """
    comp = component if isinstance(component, (set, frozenset)) else set(component)
    if u1p not in comp or u2p not in comp or z in comp:
        raise ValueError("junction needs u1', u2' inside the component and z outside")
    common = (
        set(network.path_vertices(u1p, u2p))
        & set(network.path_vertices(u1p, z))
        & set(network.path_vertices(u2p, z))
    )
    if len(common) != 1:
        raise ValueError(f"three paths meet in {sorted(common)}, expected one vertex")
    (j,) = common
    if j not in comp:
        raise ValueError(f"junction {j} lies outside the component")
    return j


def build_ideal(network: Network) -> RootedDecomposition:
    """Depth ``O(log n)`` decomposition whose every ``C(z)`` has at most two neighbours."""
    parent: dict[int, int | None] = {}
    everything = frozenset(network.vertices)
    g = find_balancer(network, everything)
    parent[g] = None
    # (component, H-parent of its root, neighbours of the component in T)
    work: deque[tuple[frozenset[int], int, frozenset[int]]] = deque(
        (part, g, frozenset((g,))) for part in split_component(network, everything, g)
    )

    def push(part: frozenset[int], above: int) -> None:
        gamma = frozenset(neighborhood(network, part))
        assert len(gamma) <= 2, f"component {sorted(part)} has neighbours {sorted(gamma)}"
        work.append((part, above, gamma))

    while work:
        comp, above, gamma = work.popleft()
        z = find_balancer(network, comp)
        parts = split_component(network, comp, z)
        home = None
        if len(gamma) == 2:
            u1, u2 = sorted(gamma)
            u1p = _attachment(network, u1, comp)
            u2p = _attachment(network, u2, comp)
            homes = [next((p for p in parts if x in p), None) for x in (u1p, u2p)]
            if homes[0] is not None and homes[0] is homes[1]:
                home = homes[0]
        if home is None:
            # one neighbour, or the two attachments fall in different parts
            parent[z] = above
            for part in parts:
                push(part, z)
            continue
        # both attachments share a part: the junction goes above the balancer
        j = find_junction(network, home, u1p, u2p, z)
        parent[j] = above
        parent[z] = j
        for part in split_component(network, home, j):
            push(part, z if any(y == z for x in part for y in network.adj[x]) else j)
        for part in parts:
            if part is not home:
                push(part, z)
    return RootedDecomposition.from_parents(network.id, IDEAL, parent)


BUILDERS = {
    ROOT_FIXING: build_root_fixing,
    BALANCING: build_balancing,
    IDEAL: build_ideal,
}


def build(network: Network, kind: str = IDEAL) -> RootedDecomposition:
    try:
        return BUILDERS[kind](network)
    except KeyError:
        raise ValueError(f"unknown decomposition kind {kind!r}") from None


def pivot_set(decomposition: RootedDecomposition, network: Network, z: int) -> set[int]:
    """``chi(z)``: the network neighbours of ``C(z)``."""
    return neighborhood(network, decomposition.component(z))


def decomposition_report(decomposition: RootedDecomposition, network: Network) -> DecompositionReport:
    """Depth, pivot size and every pivot set, computed edge by edge.

    For a network edge ``(x, y)``, ``y`` is a neighbour of ``C(z)`` exactly for
    the ``z`` on the ``H``-path from ``x`` up to, but excluding,
    ``LCA_H(x, y)``; symmetrically for ``x``.
    """
    pivots: dict[int, set[int]] = {v: set() for v in decomposition.parent}
    par = decomposition.parent
    for x, y in network.edges:
        w = decomposition.lca(x, y)
        for a, b in ((x, y), (y, x)):
            z = a
            while z != w:
                pivots[z].add(b)
                z = par[z]
    frozen = {v: frozenset(s) for v, s in pivots.items()}
    theta = max((len(s) for s in frozen.values()), default=0)
    return DecompositionReport(decomposition.height, theta, frozen)


def validate_decomposition(
    decomposition: RootedDecomposition, network: Network, exhaustive: bool = False
) -> Violation | None:
    """Check both tree-decomposition properties; ``None`` when valid.

    The default check runs in ``O(n * depth)``: ``C(z)`` is connected iff it
    spans ``|C(z)| - 1`` network edges, and, given that, the LCA property holds
    iff every network edge joins an ``H``-ancestor to a descendant. With
    ``exhaustive=True`` the LCA property is checked literally on all vertex
    pairs and connectivity by a search per vertex.
    """
    dec = decomposition
    if dec.network_id != network.id:
        return Violation("network", f"decomposition of {dec.network_id} checked against {network.id}")
    if set(dec.parent) != set(network.vertices):
        return Violation("span", "decomposition does not span the network's vertices")
    try:
        rebuilt = RootedDecomposition.from_parents(dec.network_id, dec.kind, dec.parent)
    except ValueError as exc:
        return Violation("tree", str(exc))
    if rebuilt.root != dec.root or rebuilt.depth != dec.depth:
        return Violation("depth", "stored root or depths disagree with the parent map")
    if exhaustive:
        return _validate_exhaustive(dec, network)

    size = dict.fromkeys(dec.parent, 1)
    inner = dict.fromkeys(dec.parent, 0)
    for x, y in network.edges:
        inner[dec.lca(x, y)] += 1
    for v in sorted(dec.parent, key=lambda x: -dec.depth[x]):
        p = dec.parent[v]
        if p is not None:
            size[p] += size[v]
            inner[p] += inner[v]
    for v in sorted(dec.parent):
        if inner[v] != size[v] - 1:
            return Violation("component", f"C({v}) is not connected in the network", (v,))
    for x, y in network.edges:
        if not (dec.is_ancestor_or_self(x, y) or dec.is_ancestor_or_self(y, x)):
            w = dec.lca(x, y)
            return Violation("lca", f"path {x}-{y} misses LCA {w}", (x, y, w))
    return None


def _validate_exhaustive(dec: RootedDecomposition, network: Network) -> Violation | None:
    verts = sorted(dec.parent)
    for i, x in enumerate(verts):
        for y in verts[i + 1 :]:
            w = dec.lca(x, y)
            if w not in network.path_vertices(x, y):
                return Violation("lca", f"path {x}-{y} misses LCA {w}", (x, y, w))
    for z in verts:
        comp = dec.component(z)
        seen = {z}
        stack = [z]
        while stack:
            a = stack.pop()
            for b in network.adj[a]:
                if b in comp and b not in seen:
                    seen.add(b)
                    stack.append(b)
        if seen != comp:
            return Violation("component", f"C({z}) is not connected in the network", (z,))
    return None
