"""Search-problem gadget: a one-hot matrix encoded as a weighted graph whose
spanning trees reveal the matrix.

For an ``n x k`` matrix with one 1 per row, the graph has a hub ``s``, left
vertices ``l_1..l_k`` and right vertices ``r_1..r_n``. Hub edges ``(s, l_i)``
have weight 1 and ``(l_i, r_j)`` has weight ``M[j, i]``, so the only tree of
positive weight joins each ``r_j`` to the ``l_i`` of its 1-entry. The refined
variant uses ``1/n^4`` instead of 0; the planted tree is then drawn with
probability ``1 / (weighted tree count)``.
"""

from __future__ import annotations

import numpy as np

from ._validation import check_rng
from .exact import count_weighted_trees
from .exceptions import GraphError
from .graph import WeightedGraph


class RecoveryError(GraphError):
    """A tree does not attach every right vertex to exactly one left vertex."""


def check_search_matrix(M) -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise GraphError("search matrix must be a non-empty 2-d array")
    if not np.isin(M, (0, 1)).all():
        raise GraphError("search matrix entries must be 0 or 1")
    if not (M.sum(axis=1) == 1).all():
        raise GraphError("every row of the search matrix needs exactly one 1")
    return M.astype(np.int64)


def random_search_matrix(n: int, k: int, random_state=None) -> np.ndarray:
    rng = check_rng(random_state)
    M = np.zeros((n, k), np.int64)
    M[np.arange(n), rng.integers(0, k, size=n)] = 1
    return M


def all_search_matrices(n: int, k: int):
    """Every one-hot ``n x k`` matrix (``k**n`` of them)."""
    for code in range(k**n):
        M = np.zeros((n, k), np.int64)
        for j in range(n):
            M[j, code % k] = 1
            code //= k
        yield M


def build_gadget(M, refined: bool = False) -> WeightedGraph:
    """Vertex order: hub 0, left ``1..k``, right ``k+1..k+n``; hub edges
    first, then matrix edges row by row."""
    M = check_search_matrix(M)
    n, k = M.shape
    low = 1.0 / n**4 if refined else 0.0
    edges = [(0, 1 + i, 1.0) for i in range(k)]
    for j in range(n):
        for i in range(k):
            edges.append((1 + i, 1 + k + j, 1.0 if M[j, i] else low))
    return WeightedGraph.from_edges(1 + k + n, edges)


def planted_tree(M) -> tuple[int, ...]:
    M = check_search_matrix(M)
    n, k = M.shape
    return tuple(range(k)) + tuple(k + j * k + int(np.argmax(M[j])) for j in range(n))


def recover_matrix(tree, n: int, k: int) -> np.ndarray:
    """Read the matrix off a spanning tree of an ``n x k`` gadget."""
    tree = [int(e) for e in tree]
    if len(tree) != n + k:
        raise RecoveryError(f"expected {n + k} tree edges, got {len(tree)}")
    M = np.zeros((n, k), np.int64)
    for e in tree:
        if e < k:
            continue
        j, i = divmod(e - k, k)
        if j >= n:
            raise RecoveryError(f"edge {e} is not an edge of a {n}x{k} gadget")
        M[j, i] += 1
    bad = np.flatnonzero(M.sum(axis=1) != 1)
    if bad.size:
        raise RecoveryError(f"right vertices {bad.tolist()} do not have exactly one left neighbour")
    return M


def refined_success_probability(M) -> float:
    """Exact probability that a weighted-uniform tree of the refined gadget
    recovers ``M``.

    Recovery succeeds only on the planted tree (any tree that makes every
    right vertex a leaf must also contain every hub edge), whose weight
    product is 1.
    """
    return 1.0 / count_weighted_trees(build_gadget(M, refined=True))
