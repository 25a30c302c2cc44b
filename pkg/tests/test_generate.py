from __future__ import annotations

from fractions import Fraction

import networkx as nx
import numpy as np
import pytest

from channelflow.generate import GenConfig, generate, prufer_decode, random_tree
from channelflow.model import expand_demand_instances


def test_same_seed_same_bytes():
    cfg = GenConfig(n=16, m=8, r=2, seed=7)
    assert generate(cfg).dumps() == generate(cfg).dumps()
    assert generate(cfg).dumps() != generate(GenConfig(n=16, m=8, r=2, seed=8)).dumps()


def test_prufer_decode_matches_networkx():
    rng = np.random.default_rng(1)
    for n in range(3, 40):
        seq = rng.integers(1, n + 1, size=n - 2).tolist()
        ours = {tuple(sorted(e)) for e in prufer_decode(seq, n)}
        theirs = nx.from_prufer_sequence([x - 1 for x in seq])
        assert ours == {tuple(sorted((a + 1, b + 1))) for a, b in theirs.edges}


def test_generated_trees_are_connected():
    rng = np.random.default_rng(2)
    for n in (2, 3, 17, 128):
        net = random_tree(n, rng)
        assert nx.is_tree(nx.Graph(net.edges)) and len(net.edges) == n - 1


def test_tight_line_windows_give_one_start():
    p = generate(GenConfig(kind="line", n=20, m=10, r=3, seed=3, window_slack=0))
    insts = expand_demand_instances(p)
    for a in p.demands:
        assert a.dl - a.rt + 1 == a.rho
    assert len(insts) == sum(len(p.access[a.owner]) for a in p.demands)


@pytest.mark.parametrize("profile, low, high", [
    ("unit", 1, 1), ("narrow", Fraction(1, 10), Fraction(1, 2)),
    ("wide", Fraction(11, 20), 1), ("mixed", Fraction(1, 10), 1),
])
def test_height_profiles(profile, low, high):
    p = generate(GenConfig(n=10, m=40, r=1, seed=4, heights=profile))
    assert all(low <= a.height <= high for a in p.demands)


def test_profit_range_and_access():
    p = generate(GenConfig(n=10, m=30, r=4, seed=5, profit_min=3, profit_max=9, max_access=2))
    assert all(3 <= a.profit <= 9 for a in p.demands)
    assert all(1 <= len(acc) <= 2 for acc in p.access.values())


@pytest.mark.parametrize("bad", [
    dict(n=1), dict(r=0), dict(heights="tall"), dict(profit_min=5, profit_max=2), dict(kind="ring"),
])
def test_invalid_ranges(bad):
    with pytest.raises(ValueError):
        generate(GenConfig(**bad))
