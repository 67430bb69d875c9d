"""Exact spanning-tree samplers, enumeration and matrix-tree counting.

These are the ground truth the down-up walk is checked against, and Wilson's
algorithm doubles as the walk's down-step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _kernels
from ._validation import check_graph, check_rng
from .exceptions import DisconnectedGraphError, EnumerationLimitError
from .graph import LabeledEdge, WeightedGraph, _components, laplacian_from_arrays

MAX_ENUMERATED_TREES = 10**6


@dataclass(frozen=True, eq=False)
class MultigraphView:
    """Multigraph whose edges are labelled copies of base-graph edges.

    ``u[c], v[c], w[c]`` describe copy ``c`` and ``labels[c]`` names it as
    ``(base edge, copy index)``.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    labels: tuple

    @classmethod
    def from_graph(cls, G: WeightedGraph) -> "MultigraphView":
        labels = tuple(LabeledEdge(e, 1) for e in range(G.m))
        return cls(G.n, G.u.copy(), G.v.copy(), G.w.copy(), labels)

    @property
    def size(self) -> int:
        return len(self.labels)

    def positive(self) -> np.ndarray:
        return np.flatnonzero(self.w > 0)

    def is_connected(self) -> bool:
        keep = self.positive()
        return len(set(_components(self.n, self.u[keep], self.v[keep]).tolist())) == 1


def _as_multigraph(H):
    if isinstance(H, MultigraphView):
        return H
    return MultigraphView.from_graph(check_graph(H))


def _positive_arrays(H: MultigraphView):
    keep = H.positive()
    return keep, H.u[keep], H.v[keep], H.w[keep]


def wilson_sample(H, random_state=None):
    """Exact weighted-uniform spanning tree by Wilson's algorithm (root 0).

    For a :class:`MultigraphView` the tree is returned as sorted
    :class:`LabeledEdge` labels; for a plain graph as sorted edge indices.
    """
    rng = check_rng(random_state)
    M = _as_multigraph(H)
    if not M.is_connected():
        raise DisconnectedGraphError("Wilson's algorithm needs a connected positive-weight multigraph")
    keep, u, v, w = _positive_arrays(M)
    local = _kernels.wilson(M.n, u, v, w, rng)
    copies = keep[local]
    if isinstance(H, MultigraphView):
        return tuple(sorted(M.labels[c] for c in copies))
    return tuple(sorted(int(c) for c in copies))


def aldous_broder_sample(G, random_state=None) -> tuple[int, ...]:
    """Exact weighted-uniform spanning tree from first-entrance edges."""
    rng = check_rng(random_state)
    M = _as_multigraph(G)
    if not M.is_connected():
        raise DisconnectedGraphError("Aldous-Broder needs a connected positive-weight graph")
    keep, u, v, w = _positive_arrays(M)
    return tuple(sorted(int(c) for c in keep[_kernels.aldous_broder(M.n, u, v, w, rng)]))


def _reduced_det(n, u, v, w) -> float:
    if n == 1:
        return 1.0
    L = laplacian_from_arrays(n, u, v, w)
    sign, logdet = np.linalg.slogdet(L[1:, 1:])
    if sign <= 0:
        return 0.0
    return float(math.exp(logdet))


def count_weighted_trees(G) -> float:
    """Weighted spanning-tree count: any cofactor of the Laplacian.

    Zero if the graph is disconnected on positive weights.
    """
    M = _as_multigraph(G)
    if not M.is_connected():
        return 0.0
    _, u, v, w = _positive_arrays(M)
    return _reduced_det(M.n, u, v, w)


def _spanning_edge_sets(n, u, v):
    """Yield every spanning tree of a multigraph as a sorted tuple of copy ids.

    Include/exclude recursion over edges in index order (include first, so the
    output is lexicographic). Including an edge contracts it; excluding it
    deletes it, which is only explored while the rest can still span.
    """
    c = len(u)
    u = [int(x) for x in u]
    v = [int(x) for x in v]

    def find(parent, x):
        while parent[x] != x:
            x = parent[x]
        return x

    def can_span(parent, i):
        p = list(parent)
        comps = sum(1 for x in range(n) if find(p, x) == x)
        for e in range(i, c):
            ra, rb = find(p, u[e]), find(p, v[e])
            if ra != rb:
                p[ra] = rb
                comps -= 1
                if comps == 1:
                    return True
        return comps == 1

    chosen = []

    def rec(parent, i):
        if len(chosen) == n - 1:
            yield tuple(chosen)
            return
        if c - i < n - 1 - len(chosen):
            return
        ra, rb = find(parent, u[i]), find(parent, v[i])
        if ra != rb:
            p = list(parent)
            p[ra] = rb
            chosen.append(i)
            yield from rec(p, i + 1)
            chosen.pop()
        if can_span(parent, i + 1):
            yield from rec(parent, i + 1)

    if n == 1:
        yield ()
        return
    if can_span(list(range(n)), 0):
        yield from rec(list(range(n)), 0)


def enumerate_trees(G, max_trees: int = MAX_ENUMERATED_TREES):
    """All spanning trees in the support of the weighted-uniform law.

    Returns a list of ``(tree, probability)`` with trees as sorted tuples of
    edge indices (copy indices for a :class:`MultigraphView`), in
    lexicographic order. Trees through zero-weight edges have probability
    zero and are not listed.
    """
    M = _as_multigraph(G)
    if not M.is_connected():
        raise DisconnectedGraphError("cannot enumerate spanning trees of a disconnected graph")
    keep, u, v, w = _positive_arrays(M)
    count = _reduced_det(M.n, u, v, np.ones_like(w))
    if count > max_trees + 0.5:
        raise EnumerationLimitError(f"graph has about {count:.0f} spanning trees (limit {max_trees})")
    trees = []
    weights = []
    for local in _spanning_edge_sets(M.n, u, v):
        trees.append(tuple(int(keep[i]) for i in local))
        weights.append(math.prod(float(w[i]) for i in local))
    total = math.fsum(weights)
    return [(t, x / total) for t, x in zip(trees, weights)]


class ExactTreeSampler(BaseEstimator):
    """Exact weighted-uniform spanning-tree sampler.

    Parameters
    ----------
    method : {"wilson", "aldous"}
    random_state : int, Generator or None
    """

    def __init__(self, method="wilson", random_state=None):
        self.method = method
        self.random_state = random_state

    def fit(self, G, y=None):
        if self.method not in ("wilson", "aldous"):
            raise ValueError(f"unknown method {self.method!r}")
        G = check_graph(G, connected=True)
        self.graph_ = G
        self.keep_ = np.flatnonzero(G.w > 0)
        self._rng = check_rng(self.random_state)
        return self

    def sample(self, n_samples=1, random_state=None):
        """Draw ``n_samples`` trees as rows of sorted edge indices."""
        check_is_fitted(self, "graph_")
        rng = self._rng if random_state is None else check_rng(random_state)
        G, keep = self.graph_, self.keep_
        kernel = _kernels.wilson_batch if self.method == "wilson" else _kernels.aldous_broder_batch
        local = kernel(G.n, G.u[keep], G.v[keep], G.w[keep], int(n_samples), rng)
        return keep[local]
