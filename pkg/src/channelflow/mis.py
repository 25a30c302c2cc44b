"""Luby's randomized maximal independent set, with round counting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Set

import numpy as np


@dataclass(frozen=True)
class MISResult:
    members: frozenset[int]
    rounds: int


def mis_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for one MIS call, derived from the run seed and a key tuple."""
    return np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, *key]))


def luby_mis(graph: Mapping[int, Set[int]], rng: np.random.Generator) -> MISResult:
    """Each round every live vertex draws a priority; local minima join.

    Joined vertices and their neighbours leave the graph. Priorities are drawn
    in ascending vertex order, so the outcome depends only on the graph and
    the generator state. Ties fall back to vertex id.
    """
    live = set(graph)
    members: set[int] = set()
    rounds = 0
    while live:
        rounds += 1
        order = sorted(live)
        prio = dict(zip(order, rng.random(len(order)).tolist()))
        joined = [
            v
            for v in order
            if all((prio[v], v) < (prio[u], u) for u in graph[v] if u in live)
        ]
        members.update(joined)
        gone = set(joined)
        for v in joined:
            gone.update(u for u in graph[v] if u in live)
        live -= gone
    return MISResult(frozenset(members), rounds)


def is_independent(graph: Mapping[int, Set[int]], chosen: Set[int]) -> bool:
    return all(graph[v].isdisjoint(chosen) for v in chosen)


def is_maximal(graph: Mapping[int, Set[int]], chosen: Set[int]) -> bool:
    return all(v in chosen or not graph[v].isdisjoint(chosen) for v in graph)
