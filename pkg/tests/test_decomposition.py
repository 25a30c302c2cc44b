from __future__ import annotations

import math

import networkx as nx
import numpy as np
import pytest

from channelflow.decomposition import (
    BALANCING,
    IDEAL,
    ROOT_FIXING,
    RootedDecomposition,
    build,
    build_balancing,
    build_ideal,
    build_root_fixing,
    decomposition_report,
    find_balancer,
    find_junction,
    neighborhood,
    pivot_set,
    split_component,
    validate_decomposition,
)
from channelflow.generate import random_tree
from channelflow.model import Network


def _graph(net: Network) -> nx.Graph:
    g = nx.Graph(net.edges)
    g.add_nodes_from(net.vertices)
    return g


def _gamma(net: Network, comp: set[int]) -> set[int]:
    g = _graph(net)
    return set().union(*(set(g[x]) for x in comp)) - comp


def _random_trees(count: int, low: int, high: int, seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield random_tree(int(rng.integers(low, high + 1)), rng)


def test_balancer_on_path_takes_lowest_candidate():
    net = Network.path(1, 4)
    assert find_balancer(net, {1, 2, 3, 4}) == 2


def test_balancer_of_star_and_singleton():
    star = Network(1, 5, [(3, 1), (3, 2), (3, 4), (3, 5)])
    assert find_balancer(star, range(1, 6)) == 3
    assert find_balancer(star, {4}) == 4
    with pytest.raises(ValueError):
        find_balancer(star, set())


def test_balancer_matches_exhaustive_split_check():
    for net in _random_trees(40, 2, 40, seed=1):
        g = _graph(net)
        comp = set(net.vertices)
        ok = [
            z for z in sorted(comp)
            if all(len(c) <= len(comp) // 2 for c in nx.connected_components(g.subgraph(comp - {z})))
        ]
        assert find_balancer(net, comp) == ok[0]


def test_split_component_on_path():
    net = Network.path(1, 4)
    assert split_component(net, {1, 2, 3, 4}, 2) == [frozenset({1}), frozenset({3, 4})]
    with pytest.raises(ValueError):
        split_component(net, {1, 2}, 3)


def test_split_component_partitions():
    for net in _random_trees(30, 2, 50, seed=2):
        g = _graph(net)
        comp = set(net.vertices)
        z = int(net.n // 2 + 1)
        parts = split_component(net, comp, z)
        assert set().union(set(), *parts) | {z} == comp
        assert sum(len(p) for p in parts) == len(comp) - 1
        assert all(nx.is_connected(g.subgraph(p)) for p in parts)
        assert [min(p) for p in parts] == sorted(min(p) for p in parts)


def test_case_two_a_neighbourhoods():
    # outside neighbours 1 and 2 attach at 3 and 7, on opposite sides of the balancer 5
    net = Network(1, 8, [(1, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 2), (5, 8)])
    comp = {3, 4, 5, 6, 7, 8}
    z = find_balancer(net, comp)
    assert z == 5
    parts = split_component(net, comp, z)
    assert [neighborhood(net, p) for p in parts] == [{1, 5}, {2, 5}, {5}]


def test_case_two_b_junction_and_neighbourhoods():
    # both outside neighbours attach inside the same part; the junction 4 sits between them
    leaves = [(7, x) for x in range(8, 14)]
    net = Network(1, 13, [(1, 3), (3, 4), (4, 5), (5, 2), (4, 6), (6, 7)] + leaves)
    comp = set(range(3, 14))
    z = find_balancer(net, comp)
    assert z == 7
    home = split_component(net, comp, z)[0]
    assert home == {3, 4, 5, 6}
    j = find_junction(net, home, 3, 5, z)
    assert j == 4
    gammas = {min(p): neighborhood(net, p) for p in split_component(net, home, j)}
    assert gammas == {6: {j, z}, 3: {1, j}, 5: {2, j}}


def test_junction_of_star_and_side_branch():
    y = Network(1, 4, [(1, 2), (1, 3), (1, 4)])
    assert find_junction(y, {1, 2, 3}, 2, 3, 4) == 1
    side = Network(1, 4, [(1, 2), (2, 3), (2, 4)])
    assert find_junction(side, {1, 2, 3}, 1, 3, 4) == 2


def test_junction_matches_path_intersection():
    rng = np.random.default_rng(3)
    for net in _random_trees(40, 5, 40, seed=3):
        g = _graph(net)
        z = int(rng.integers(1, net.n + 1))
        rest = [x for x in net.vertices if x != z]
        a, b = (int(x) for x in rng.choice(rest, size=2, replace=False))
        comp = set(rest)
        common = (set(nx.shortest_path(g, a, b)) & set(nx.shortest_path(g, a, z))
                  & set(nx.shortest_path(g, b, z)))
        (want,) = common
        if want == z:
            with pytest.raises(ValueError):
                find_junction(net, comp, a, b, z)
        else:
            assert find_junction(net, comp, a, b, z) == want


def test_root_fixing_on_path_has_depth_n():
    dec = build_root_fixing(Network.path(1, 9), 1)
    assert dec.height == 9
    assert decomposition_report(dec, Network.path(1, 9)).theta == 1


def test_root_fixing_has_unit_pivots():
    for net in _random_trees(40, 2, 60, seed=4):
        dec = build_root_fixing(net, 1)
        assert validate_decomposition(dec, net) is None
        assert decomposition_report(dec, net).theta == 1


def test_balancing_on_example_tree(fig5):
    dec = build_balancing(fig5)
    assert dec.root == 1
    assert dec.component(5) == {5, 9, 8, 2, 12, 13, 4}
    assert pivot_set(dec, fig5, 5) == {1}
    assert pivot_set(dec, fig5, 2) == {1, 5}


def test_ideal_on_example_tree(fig5):
    dec = build_ideal(fig5)
    assert validate_decomposition(dec, fig5) is None
    assert dec.component(5) == {5, 9, 8, 2, 12, 13, 4}
    assert pivot_set(dec, fig5, 2) == {1, 5}
    assert decomposition_report(dec, fig5).theta <= 2


@pytest.mark.parametrize("k", range(0, 8))
def test_balancing_path_depth(k):
    net = Network.path(1, 2**k)
    assert build_balancing(net).height == k + 1


def test_single_vertex_decompositions():
    net = Network(1, 1, [])
    for kind in (ROOT_FIXING, BALANCING, IDEAL):
        dec = build(net, kind)
        assert dec.height == 1
        assert validate_decomposition(dec, net) is None


def test_two_vertex_tree_either_rooting_is_valid():
    net = Network(1, 2, [(1, 2)])
    for root in (1, 2):
        assert validate_decomposition(build_root_fixing(net, root), net) is None


def test_balancing_halves_components():
    for net in _random_trees(40, 2, 200, seed=5):
        dec = build_balancing(net)
        assert validate_decomposition(dec, net) is None
        assert dec.height <= math.ceil(math.log2(net.n)) + 1
        sizes = {v: len(dec.component(v)) for v in net.vertices}
        for v, p in dec.parent.items():
            if p is not None:
                assert sizes[v] <= sizes[p] // 2
        assert decomposition_report(dec, net).theta <= dec.height - 1


def test_ideal_bounds_on_random_trees():
    for net in _random_trees(100, 2, 300, seed=6):
        dec = build_ideal(net)
        rep = decomposition_report(dec, net)
        assert validate_decomposition(dec, net) is None
        assert rep.theta <= 2
        assert rep.depth <= 2 * math.ceil(math.log2(net.n)) + 1


def test_pivots_match_brute_force_neighbourhood():
    for net in _random_trees(30, 2, 60, seed=7):
        for kind in (ROOT_FIXING, BALANCING, IDEAL):
            dec = build(net, kind)
            rep = decomposition_report(dec, net)
            for z in net.vertices:
                want = _gamma(net, dec.component(z))
                assert set(rep.pivots[z]) == want == pivot_set(dec, net, z)
            assert pivot_set(dec, net, dec.root) == set()


def test_builders_are_deterministic():
    for net in _random_trees(10, 2, 100, seed=8):
        clone = Network(net.id, net.n, list(reversed(net.edges)))
        for kind in (ROOT_FIXING, BALANCING, IDEAL):
            assert build(net, kind).dumps() == build(clone, kind).dumps()


def test_dump_format(fig5):
    dec = build_ideal(fig5)
    data = dec.to_dict(decomposition_report(dec, fig5))
    assert set(data) == {"net", "kind", "root", "parent", "report"}
    assert data["kind"] == IDEAL and data["report"]["theta"] <= 2


def _mutations(dec: RootedDecomposition, rng: np.random.Generator, count: int):
    vertices = sorted(dec.parent)
    for _ in range(count):
        v = int(rng.choice([x for x in vertices if x != dec.root]))
        inside = dec.component(v)
        choices = [w for w in vertices if w not in inside and w != dec.parent[v]]
        if not choices:
            continue
        parent = dict(dec.parent)
        parent[v] = int(rng.choice(choices))
        yield RootedDecomposition.from_parents(dec.network_id, dec.kind, parent)


def test_fast_validator_agrees_with_exhaustive_on_mutations():
    rng = np.random.default_rng(9)
    total = rejected = 0
    for net in _random_trees(60, 4, 40, seed=9):
        for kind in (BALANCING, IDEAL):
            for bad in _mutations(build(net, kind), rng, 6):
                fast = validate_decomposition(bad, net)
                slow = validate_decomposition(bad, net, exhaustive=True)
                assert (fast is None) == (slow is None)
                total += 1
                rejected += fast is not None
    assert rejected / total >= 0.99


def test_validator_rejects_mismatched_network(fig5):
    dec = build_ideal(fig5)
    other = Network(2, 15, fig5.edges)
    assert validate_decomposition(dec, other).kind == "network"
