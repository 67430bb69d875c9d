"""Small graph families for tests, verification runs and benchmarks."""

from __future__ import annotations

import itertools

from ._validation import check_rng
from .graph import WeightedGraph


def complete_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    return WeightedGraph.from_edges(n, [(a, b, weight) for a, b in itertools.combinations(range(n), 2)])


def path_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    return WeightedGraph.from_edges(n, [(i, i + 1, weight) for i in range(n - 1)])


def star_graph(n: int, weight: float = 1.0) -> WeightedGraph:
    return WeightedGraph.from_edges(n, [(0, i, weight) for i in range(1, n)])


def random_tree_edges(n: int, rng) -> set:
    perm = rng.permutation(n)
    edges = set()
    for i in range(1, n):
        a, b = int(perm[i]), int(perm[rng.integers(i)])
        edges.add((min(a, b), max(a, b)))
    return edges


def random_connected_graph(n: int, m: int, low: float = 0.1, high: float = 10.0,
                           random_state=None) -> WeightedGraph:
    """Random spanning tree plus uniformly random extra pairs, weights
    uniform in ``[low, high]``. ``m`` is clipped to ``[n - 1, n(n-1)/2]``."""
    rng = check_rng(random_state)
    m = int(min(max(m, n - 1), n * (n - 1) // 2))
    edges = random_tree_edges(n, rng)
    rest = [p for p in itertools.combinations(range(n), 2) if p not in edges]
    extra = rng.choice(len(rest), size=m - len(edges), replace=False) if m > len(edges) else []
    edges |= {rest[i] for i in extra}
    edges = sorted(edges)
    w = rng.uniform(low, high, size=len(edges))
    return WeightedGraph.from_edges(n, [(a, b, float(x)) for (a, b), x in zip(edges, w)])


def random_small_graph(random_state=None, max_n: int = 5, low: float = 0.1, high: float = 10.0):
    """Connected graph on 2..max_n vertices with a random number of edges."""
    rng = check_rng(random_state)
    n = int(rng.integers(2, max_n + 1))
    m = int(rng.integers(n - 1, n * (n - 1) // 2 + 1))
    return random_connected_graph(n, m, low, high, rng)


def graph_family(name: str, n: int, random_state=None) -> WeightedGraph:
    """``dense`` (half of all pairs), ``sparse`` (about 4n edges) or ``complete``."""
    if name == "dense":
        return random_connected_graph(n, n * (n - 1) // 4, random_state=random_state)
    if name == "sparse":
        return random_connected_graph(n, 4 * n, random_state=random_state)
    if name == "complete":
        return complete_graph(n)
    raise ValueError(f"unknown graph family {name!r}")
