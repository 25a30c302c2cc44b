from __future__ import annotations

import itertools

import numpy as np

from channelflow.mis import is_independent, is_maximal, luby_mis, mis_rng


def _random_graph(rng: np.random.Generator) -> dict[int, set[int]]:
    n = int(rng.integers(1, 40))
    p = float(rng.random())
    graph = {v: set() for v in range(n)}
    for a, b in itertools.combinations(range(n), 2):
        if rng.random() < p:
            graph[a].add(b)
            graph[b].add(a)
    return graph


def test_edgeless_graph_keeps_everything():
    graph = {v: set() for v in range(10)}
    res = luby_mis(graph, mis_rng(0))
    assert res.members == set(range(10))
    assert res.rounds == 1


def test_complete_graph_keeps_one_vertex():
    graph = {v: set(range(8)) - {v} for v in range(8)}
    assert len(luby_mis(graph, mis_rng(5)).members) == 1


def test_empty_graph():
    res = luby_mis({}, mis_rng(0))
    assert res.members == frozenset() and res.rounds == 0


def test_random_graphs_give_maximal_independent_sets():
    rng = np.random.default_rng(2024)
    for k in range(1000):
        graph = _random_graph(rng)
        res = luby_mis(graph, mis_rng(7, k))
        assert is_independent(graph, res.members)
        assert is_maximal(graph, res.members)
        assert res.rounds <= len(graph)


def test_checkers_catch_bad_sets():
    path = {0: {1}, 1: {0, 2}, 2: {1}}
    assert not is_independent(path, {0, 1})
    assert not is_maximal(path, {0})
    assert is_maximal(path, {1}) and is_maximal(path, {0, 2})


def test_same_key_same_result():
    graph = _random_graph(np.random.default_rng(1))
    a = luby_mis(graph, mis_rng(3, 1, 2, 3))
    b = luby_mis(graph, mis_rng(3, 1, 2, 3))
    assert a == b
