from __future__ import annotations

import math
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from channelflow.decomposition import build_ideal, build_root_fixing, decomposition_report
from channelflow.generate import GenConfig, generate
from channelflow.layering import (
    LayeredDecomposition,
    bending_point,
    capture_node,
    check_interference,
    layer_from_decomposition,
    layer_line_by_length,
    merge_layerings,
    wings,
)
from channelflow.model import LINE, Demand, Network, ProblemInstance, expand_demand_instances, overlapping

from conftest import FIG5_EDGES, tree_problem


@pytest.fixture
def d_4_13():
    p = tree_problem(15, {1: FIG5_EDGES}, [(4, 13, 1, 1, {1})])
    return expand_demand_instances(p)[0]


def test_capture_node_ideal_and_root_fixing(fig5, d_4_13):
    assert capture_node(build_ideal(fig5), d_4_13) == 5
    assert capture_node(build_root_fixing(fig5, 1), d_4_13) == 2


def test_capture_node_of_single_edge(fig5):
    p = tree_problem(15, {1: FIG5_EDGES}, [(8, 5, 1, 1, {1})])
    (d,) = expand_demand_instances(p)
    dec = build_root_fixing(fig5, 1)
    assert capture_node(dec, d) == 5


def test_bending_points(fig5, d_4_13):
    assert bending_point(fig5, d_4_13, 3) == 2
    assert bending_point(fig5, d_4_13, 9) == 5
    assert bending_point(fig5, d_4_13, 8) == 8


def test_bending_point_matches_path_oracle():
    rng = np.random.default_rng(0)
    for seed in range(10):
        p = generate(GenConfig(n=30, m=10, r=1, seed=seed))
        net = p.networks[0]
        g = nx.Graph(net.edges)
        for d in expand_demand_instances(p):
            u = int(rng.integers(1, 31))
            walk = nx.shortest_path(g, u, d.vertices[0])
            first = next(x for x in walk if x in d.vertex_set)
            assert bending_point(net, d, u) == first


def test_wings(d_4_13):
    assert wings(d_4_13, 4) == {(1, 2, 4)}
    assert wings(d_4_13, 8) == {(1, 5, 8), (1, 8, 13)}
    with pytest.raises(ValueError):
        wings(d_4_13, 3)


def test_wings_of_two_vertex_demand(fig5):
    p = tree_problem(15, {1: FIG5_EDGES}, [(1, 3, 1, 1, {1})])
    (d,) = expand_demand_instances(p)
    assert wings(d, 1) == wings(d, 3) == {(1, 1, 3)}


def _tree_layering(p: ProblemInstance, kind=build_ideal):
    net = p.networks[0]
    insts = expand_demand_instances(p)
    return insts, layer_from_decomposition(kind(net), net, insts)


def test_ideal_layering_delta_and_interference():
    for seed in range(40):
        p = generate(GenConfig(n=64, m=60, r=1, seed=seed))
        insts, lay = _tree_layering(p)
        assert lay.delta <= 6
        assert check_interference(lay, insts) is None
        for d in insts:
            assert lay.critical[d.id] <= d.edge_set


def test_root_fixing_layering_delta():
    for seed in range(20):
        p = generate(GenConfig(n=40, m=40, r=1, seed=seed))
        insts, lay = _tree_layering(p, lambda t: build_root_fixing(t, 1))
        assert lay.delta <= 4
        assert check_interference(lay, insts) is None


def test_groups_follow_capture_depth():
    p = generate(GenConfig(n=50, m=60, r=1, seed=3))
    net = p.networks[0]
    dec = build_ideal(net)
    insts = expand_demand_instances(p)
    lay = layer_from_decomposition(dec, net, insts)
    assert sorted(i for g in lay.groups for i in g) == [d.id for d in insts]
    group = lay.group_of()
    for d in insts:
        assert group[d.id] == dec.height - dec.depth[capture_node(dec, d)] + 1
    top = [d.id for d in insts if capture_node(dec, d) == dec.root]
    assert set(top) <= set(lay.groups[-1])


def test_layering_rejects_foreign_decomposition(fig5):
    other = Network(2, 15, FIG5_EDGES)
    with pytest.raises(ValueError):
        layer_from_decomposition(build_ideal(other), fig5, [])


def _line_problem(windows):
    demands = tuple(Demand(i, i, Fraction(1), rt=rt, dl=dl, rho=rho) for i, (rt, dl, rho) in enumerate(windows, 1))
    access = {i: frozenset({1}) for i in range(1, len(windows) + 1)}
    return ProblemInstance(LINE, 12, (Network.path(1, 12),), access, demands)


def test_line_critical_slots():
    insts = expand_demand_instances(_line_problem([(3, 7, 5)]))
    lay = layer_line_by_length(insts)
    assert {e.u for e in lay.critical[0]} == {3, 5, 7}
    assert lay.length == 1


def test_line_length_classes_are_half_open():
    insts = expand_demand_instances(_line_problem([(1, 2, 2), (1, 3, 3), (1, 4, 4), (1, 8, 8)]))
    lay = layer_line_by_length(insts)
    assert lay.groups == ((0, 1), (2,), (3,))
    assert lay.delta == 3


def test_line_layering_interference_on_random_windows():
    for seed in range(30):
        p = generate(GenConfig(kind=LINE, n=40, m=25, r=2, seed=seed, max_rho=12))
        insts = expand_demand_instances(p)
        lay = layer_line_by_length(insts)
        assert lay.delta <= 3
        assert check_interference(lay, insts) is None
        lengths = [d.length for d in insts]
        assert lay.length == math.ceil(math.log2(max(lengths) / min(lengths))) + 1


def test_line_layering_needs_instances():
    with pytest.raises(ValueError):
        layer_line_by_length([])


def test_interference_counterexample_is_reported():
    p = tree_problem(15, {1: FIG5_EDGES}, [(4, 13, 1, 1, {1}), (2, 5, 1, 1, {1})])
    d1, d2 = expand_demand_instances(p)
    lay = LayeredDecomposition(1, ((d1.id,), (d2.id,)), {d1.id: frozenset(), d2.id: d2.edge_set})
    assert check_interference(lay, [d1, d2]) == (d1.id, d2.id)
    single = LayeredDecomposition(1, ((d1.id,),), {d1.id: frozenset()})
    assert check_interference(single, [d1]) is None


def test_interference_check_matches_pair_oracle():
    p = generate(GenConfig(n=30, m=25, r=1, seed=12))
    insts, lay = _tree_layering(p, lambda t: build_root_fixing(t, 1))
    # Shrink every critical set to one edge; some overlaps now slip past.
    thin = LayeredDecomposition(1, lay.groups, {i: frozenset(sorted(pi)[:1]) for i, pi in lay.critical.items()})
    group = thin.group_of()
    bad = [
        (a.id, b.id) for a in insts for b in insts
        if a.id != b.id and overlapping(a, b) and group[a.id] <= group[b.id]
        and thin.critical[a.id].isdisjoint(b.edge_set)
    ]
    found = check_interference(thin, insts)
    assert (found is None) == (not bad)
    if bad:
        assert found == min(bad)


def test_merge_keeps_empty_groups_aligned():
    a = LayeredDecomposition(1, ((0,), (), (1,)), {0: frozenset(), 1: frozenset()})
    b = LayeredDecomposition(2, ((2,),), {2: frozenset()})
    merged = merge_layerings([a, b])
    assert merged.groups == ((0, 2), (), (1,))


def test_layered_dump_is_json(fig5, d_4_13):
    lay = layer_from_decomposition(build_ideal(fig5), fig5, [d_4_13])
    data = lay.to_dict()
    assert data["delta"] == lay.delta and data["length"] == decomposition_report(build_ideal(fig5), fig5).depth


def test_equal_depth_captures_at_different_nodes_never_overlap():
    seen = 0
    for seed in range(30):
        p = generate(GenConfig(n=50, m=40, r=1, seed=seed))
        net = p.networks[0]
        dec = build_ideal(net)
        insts = expand_demand_instances(p)
        mu = {d.id: capture_node(dec, d) for d in insts}
        for a in insts:
            for b in insts:
                if a.id < b.id and mu[a.id] != mu[b.id] and dec.depth[mu[a.id]] == dec.depth[mu[b.id]]:
                    seen += 1
                    assert not overlapping(a, b)
    assert seen > 0
