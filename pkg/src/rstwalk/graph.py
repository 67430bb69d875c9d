"""Weighted undirected graphs, edge-list I/O and Laplacians."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .exceptions import (
    DisconnectedGraphError,
    DuplicateEdgeError,
    GraphError,
    MalformedLineError,
    NegativeWeightError,
    SelfLoopError,
    VertexRangeError,
)


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Simple undirected graph with nonnegative edge weights.

    Edge ``i`` is ``(u[i], v[i], w[i])``; edge identity is the position in the
    input list, so zero-weight edges keep stable indices.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    _pairs: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        u = np.ascontiguousarray(self.u, dtype=np.int64)
        v = np.ascontiguousarray(self.v, dtype=np.int64)
        w = np.ascontiguousarray(self.w, dtype=np.float64)
        if not (u.shape == v.shape == w.shape) or u.ndim != 1:
            raise GraphError("edge arrays must be 1-d and of equal length")
        if self.n < 1:
            raise GraphError("graph needs at least one vertex")
        pairs = {}
        for i, (a, b, x) in enumerate(zip(u.tolist(), v.tolist(), w.tolist())):
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise GraphError(f"edge {i}: vertex index out of range [0, {self.n})")
            if a == b:
                raise GraphError(f"edge {i}: self-loop at vertex {a}")
            if not (x >= 0 and math.isfinite(x)):
                raise GraphError(f"edge {i}: weight must be finite and nonnegative, got {x}")
            key = (min(a, b), max(a, b))
            if key in pairs:
                raise GraphError(f"edge {i}: duplicate of edge {pairs[key]} on pair {key}")
            pairs[key] = i
        for arr in (u, v, w):
            arr.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "_pairs", pairs)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[float]]) -> "WeightedGraph":
        edges = list(edges)
        if not edges:
            return cls(n, np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
        u, v, w = zip(*edges)
        return cls(n, np.array(u), np.array(v), np.array(w, dtype=float))

    @property
    def m(self) -> int:
        return len(self.w)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.u.tolist(), self.v.tolist(), self.w.tolist()))

    def edge_index(self, a: int, b: int) -> int:
        """Index of the edge joining ``a`` and ``b`` (KeyError if absent)."""
        return self._pairs[(min(a, b), max(a, b))]

    def scaled(self, c: float) -> "WeightedGraph":
        return WeightedGraph(self.n, self.u, self.v, self.w * c)

    def __repr__(self):
        return f"WeightedGraph(n={self.n}, m={self.m})"


def parse_graph(text: str) -> WeightedGraph:
    """Parse the ``n m`` header + ``u v w`` line edge-list format.

    Blank lines and lines starting with ``#`` are ignored. Errors name the
    1-based line number of the offending line.
    """
    lines = [
        (no, line.split())
        for no, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not lines:
        raise MalformedLineError("empty document, expected header 'n m'", line=1)
    no, head = lines[0]
    if len(head) != 2:
        raise MalformedLineError("header must be 'n m'", line=no)
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError:
        raise MalformedLineError("header must contain two integers", line=no) from None
    if n < 1 or m < 0:
        raise MalformedLineError("header needs n >= 1 and m >= 0", line=no)
    body = lines[1:]
    if len(body) != m:
        raise MalformedLineError(f"header announces {m} edges, found {len(body)}", line=no)

    u = np.empty(m, np.int64)
    v = np.empty(m, np.int64)
    w = np.empty(m)
    seen: dict[tuple[int, int], int] = {}
    for i, (no, tok) in enumerate(body):
        if len(tok) != 3:
            raise MalformedLineError("edge line must be 'u v w'", line=no)
        try:
            a, b = int(tok[0]), int(tok[1])
            x = float(tok[2])
        except ValueError:
            raise MalformedLineError(f"malformed edge line {' '.join(tok)!r}", line=no) from None
        if a == b:
            raise SelfLoopError(f"self-loop at vertex {a}", line=no)
        if not (0 <= a < n and 0 <= b < n):
            raise VertexRangeError(f"vertex index out of range [0, {n})", line=no)
        if not math.isfinite(x):
            raise MalformedLineError("non-finite weight", line=no)
        if x < 0:
            raise NegativeWeightError(f"negative weight {x}", line=no)
        key = (min(a, b), max(a, b))
        if key in seen:
            raise DuplicateEdgeError(f"duplicate pair {key}", line=no)
        seen[key] = i
        u[i], v[i], w[i] = a, b, x
    return WeightedGraph(n, u, v, w)


def serialize_graph(G: WeightedGraph) -> str:
    lines = [f"{G.n} {G.m}"]
    lines += [f"{a} {b} {x:.17g}" for a, b, x in G.edges]
    return "\n".join(lines) + "\n"


def read_graph(path) -> WeightedGraph:
    with open(path) as fh:
        return parse_graph(fh.read())


def laplacian_from_arrays(n: int, u, v, w) -> np.ndarray:
    L = np.zeros((n, n))
    np.add.at(L, (u, v), -w)
    np.add.at(L, (v, u), -w)
    np.add.at(L, (u, u), w)
    np.add.at(L, (v, v), w)
    return L


def laplacian(G: WeightedGraph) -> np.ndarray:
    """Dense weighted Laplacian ``D - A`` of ``G``."""
    return laplacian_from_arrays(G.n, G.u, G.v, G.w)


def _components(n: int, u, v) -> np.ndarray:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in zip(u, v):
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            parent[ra] = rb
    return np.array([find(x) for x in range(n)])


def is_connected(G: WeightedGraph, positive_only: bool = True) -> bool:
    """Whether ``G`` is connected, optionally using only positive-weight edges."""
    keep = G.w > 0 if positive_only else np.ones(G.m, bool)
    roots = _components(G.n, G.u[keep], G.v[keep])
    return len(set(roots.tolist())) == 1


def require_connected(G: WeightedGraph) -> None:
    if not is_connected(G, positive_only=True):
        raise DisconnectedGraphError("graph is not connected on its positive-weight edges")


def is_spanning_tree(n: int, u, v, edge_ids) -> bool:
    edge_ids = list(edge_ids)
    if len(edge_ids) != n - 1 or len(set(edge_ids)) != len(edge_ids):
        return False
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edge_ids:
        ra, rb = find(int(u[e])), find(int(v[e]))
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def check_tree(G: WeightedGraph, tree) -> tuple[int, ...]:
    """Validate ``tree`` as a spanning tree of ``G``; return sorted edge ids."""
    ids = tuple(sorted(int(e) for e in tree))
    if any(e < 0 or e >= G.m for e in ids):
        raise GraphError("tree references an edge index outside the graph")
    if not is_spanning_tree(G.n, G.u, G.v, ids):
        raise GraphError(f"edges {ids} do not form a spanning tree on {G.n} vertices")
    return ids


def weight_product(G: WeightedGraph, tree) -> float:
    ids = check_tree(G, tree)
    return float(np.prod(G.w[list(ids)])) if ids else 1.0


class LabeledEdge(NamedTuple):
    """Copy ``j`` (1-based) of base edge ``e`` in an isotropic multigraph."""

    e: int
    j: int
