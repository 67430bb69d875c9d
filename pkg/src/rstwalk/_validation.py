"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

from __future__ import annotations

import numbers

import numpy as np

from .exceptions import GraphError
from .graph import WeightedGraph


def check_graph(G, *, connected: bool = False) -> WeightedGraph:
    """Coerce ``G`` into a :class:`WeightedGraph`.

    Accepts a ``WeightedGraph`` as-is, or a square symmetric nonnegative
    adjacency matrix (edges are read from the strict upper triangle in
    row-major order).
    """
    if not isinstance(G, WeightedGraph):
        A = np.asarray(G, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise GraphError(f"expected a WeightedGraph or square adjacency matrix, got shape {A.shape}")
        if not np.allclose(A, A.T):
            raise GraphError("adjacency matrix must be symmetric")
        iu, iv = np.nonzero(np.triu(A, k=1))
        G = WeightedGraph(A.shape[0], iu, iv, A[iu, iv])
    if connected:
        from .graph import require_connected

        require_connected(G)
    return G


def check_rng(random_state) -> np.random.Generator:
    """Turn ``None``, an int, a SeedSequence or a Generator into a Generator."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    if random_state is None or isinstance(random_state, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(random_state)
    raise TypeError(f"cannot build a Generator from {random_state!r}")


def check_epsilon(eps, name="epsilon", low=0.0, high=1.0) -> float:
    eps = float(eps)
    if not (low < eps < high):
        raise ValueError(f"{name} must lie in ({low:g}, {high:g}), got {eps}")
    return eps
