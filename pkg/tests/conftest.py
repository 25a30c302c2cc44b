from __future__ import annotations

from fractions import Fraction

import pytest

from channelflow.model import TREE, Demand, Network, ProblemInstance

# 15-vertex example tree; vertex 1 is its balancer, 5 and 2 sit below it.
FIG5_EDGES = [
    (1, 2), (2, 4), (2, 5), (5, 8), (5, 9), (8, 13), (8, 12),
    (1, 3), (3, 6), (3, 7), (1, 10), (10, 11), (10, 14), (14, 15),
]

# 13-vertex tree on which the demands (1,10), (2,3), (12,13) all use edge 4-5.
FIG2_EDGES = [
    (1, 2), (2, 4), (4, 5), (5, 3), (3, 10), (12, 4),
    (5, 13), (6, 1), (7, 2), (8, 5), (9, 3), (11, 10),
]


def tree_problem(
    n: int,
    nets: dict[int, list[tuple[int, int]]],
    demands: list[tuple[int, int, Fraction | int, Fraction | int, set[int]]],
) -> ProblemInstance:
    """Demands are ``(u, v, profit, height, access)``; demand ``i`` belongs to processor ``i``."""
    networks = tuple(Network(t, n, edges) for t, edges in nets.items())
    access, ds = {}, []
    for i, (u, v, p, h, acc) in enumerate(demands, 1):
        access[i] = frozenset(acc)
        ds.append(Demand(i, i, Fraction(p), Fraction(h), u=u, v=v))
    return ProblemInstance(TREE, n, networks, access, tuple(ds))


@pytest.fixture
def fig5() -> Network:
    return Network(1, 15, FIG5_EDGES)


@pytest.fixture
def fig2() -> Network:
    return Network(1, 13, FIG2_EDGES)


@pytest.fixture
def fig2_heights() -> ProblemInstance:
    return tree_problem(
        13,
        {1: FIG2_EDGES},
        [
            (1, 10, 1, Fraction(2, 5), {1}),
            (2, 3, 1, Fraction(7, 10), {1}),
            (12, 13, 1, Fraction(3, 10), {1}),
        ],
    )


@pytest.fixture
def fig2_unit() -> ProblemInstance:
    return tree_problem(
        13, {1: FIG2_EDGES}, [(1, 10, 1, 1, {1}), (2, 3, 1, 1, {1}), (12, 13, 1, 1, {1})]
    )
