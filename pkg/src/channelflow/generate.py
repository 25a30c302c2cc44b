"""Seeded random problem generators.

Trees come from uniformly random Prüfer sequences; line instances get random
windows. The same arguments and seed always give the same problem.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import LINE, TREE, Demand, Network, ProblemInstance

HEIGHT_PROFILES = ("unit", "narrow", "wide", "mixed")
HEIGHT_DENOM = 20


@dataclass(frozen=True)
class GenConfig:
    kind: str = TREE
    n: int = 16
    m: int = 8
    r: int = 2
    seed: int = 0
    heights: str = "unit"
    profit_min: int = 1
    profit_max: int = 16
    max_access: int | None = None
    max_rho: int | None = None
    window_slack: int = 3

    def check(self) -> None:
        if self.kind not in (TREE, LINE):
            raise ValueError(f"kind must be {TREE!r} or {LINE!r}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.m < 0 or self.r < 1:
            raise ValueError("need m >= 0 and r >= 1")
        if self.heights not in HEIGHT_PROFILES:
            raise ValueError(f"height profile must be one of {HEIGHT_PROFILES}")
        if not 1 <= self.profit_min <= self.profit_max:
            raise ValueError("need 1 <= profit_min <= profit_max")
        if self.window_slack < 0:
            raise ValueError("window_slack must be non-negative")


def prufer_decode(seq: list[int], n: int) -> list[tuple[int, int]]:
    """Edges of the labelled tree on ``1..n`` encoded by ``seq`` (length n-2)."""
    if n == 2:
        return [(1, 2)]
    degree = [1] * (n + 1)
    for x in seq:
        degree[x] += 1
    leaves = [v for v in range(1, n + 1) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    a, b = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((a, b))
    return edges


def random_tree(n: int, rng: np.random.Generator, id: int = 1) -> Network:
    seq = rng.integers(1, n + 1, size=max(0, n - 2)).tolist()
    return Network(id, n, prufer_decode(seq, n))


def _height(profile: str, rng: np.random.Generator) -> Fraction:
    if profile == "unit":
        return Fraction(1)
    half = HEIGHT_DENOM // 2
    if profile == "narrow":
        k = int(rng.integers(2, half + 1))
    elif profile == "wide":
        k = int(rng.integers(half + 1, HEIGHT_DENOM + 1))
    else:
        k = int(rng.integers(2, HEIGHT_DENOM + 1))
    return Fraction(k, HEIGHT_DENOM)


def generate(config: GenConfig) -> ProblemInstance:
    config.check()
    rng = np.random.default_rng(config.seed)
    n, r = config.n, config.r
    if config.kind == TREE:
        networks = tuple(random_tree(n, rng, t) for t in range(1, r + 1))
    else:
        networks = tuple(Network.path(t, n) for t in range(1, r + 1))
    top = min(r, config.max_access or r)
    access, demands = {}, []
    slots = n - 1
    max_rho = min(slots, config.max_rho or max(1, slots // 2))
    for i in range(1, config.m + 1):
        size = int(rng.integers(1, top + 1))
        access[i] = frozenset(int(t) + 1 for t in rng.choice(r, size=size, replace=False))
        profit = Fraction(int(rng.integers(config.profit_min, config.profit_max + 1)))
        height = _height(config.heights, rng)
        if config.kind == TREE:
            u, v = (int(x) + 1 for x in rng.choice(n, size=2, replace=False))
            demands.append(Demand(i, i, profit, height, u=u, v=v))
        else:
            rho = int(rng.integers(1, max_rho + 1))
            slack = int(rng.integers(0, min(config.window_slack, slots - rho) + 1))
            rt = int(rng.integers(1, slots - rho - slack + 2))
            demands.append(Demand(i, i, profit, height, rt=rt, dl=rt + rho + slack - 1, rho=rho))
    return ProblemInstance(config.kind, n, networks, access, tuple(demands))
