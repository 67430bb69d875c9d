"""Implicit isotropic multigraph: every edge ``e`` is split into ``q_e`` copies.

``q_e = ceil(m * l~_e / lambda)`` and each copy carries weight ``w_e / q_e``.
With ``lambda >= sum(l~)`` the multigraph has at most ``2m`` copies and every
copy lies in a weighted-uniform spanning tree with probability at most
``lambda / m``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exact import MultigraphView
from .exceptions import GraphError
from .graph import LabeledEdge, WeightedGraph
from .resistance import LeverageVector, ResistanceOracle, build_exact_oracle, leverage_scores

# absorbs rounding when m * l~_e / lambda lands a hair above an integer
CEIL_SLACK = 1e-9


def copy_counts(leverage, m: int, lam: float) -> np.ndarray:
    x = m * np.asarray(leverage, dtype=float) / lam
    q = np.ceil(x * (1.0 - CEIL_SLACK)).astype(np.int64)
    q[x <= 0] = 0
    return q


@dataclass(frozen=True, eq=False)
class IsotropicView:
    graph: WeightedGraph
    leverage: LeverageVector
    lambda_: float
    q: np.ndarray
    offsets: np.ndarray

    @property
    def m_prime(self) -> int:
        return int(self.q.sum())

    def copy_id(self, label) -> int:
        e, j = label
        if not (0 <= e < self.graph.m) or not (1 <= j <= self.q[e]):
            raise GraphError(f"invalid label {tuple(label)}: edge {e} has {self.q[e] if 0 <= e < self.graph.m else 0} copies")
        return int(self.offsets[e] + j - 1)

    def label(self, copy_id: int) -> LabeledEdge:
        e = int(np.searchsorted(self.offsets, copy_id, side="right") - 1)
        return LabeledEdge(e, int(copy_id - self.offsets[e] + 1))

    def copy_weight(self, e: int) -> float:
        return float(self.graph.w[e] / self.q[e])

    def copy_arrays(self):
        """Endpoints, weights and base edge of every copy, indexed by copy id."""
        G = self.graph
        edge = np.repeat(np.arange(G.m), self.q)
        with np.errstate(divide="ignore", invalid="ignore"):
            cw = np.where(self.q > 0, G.w / np.maximum(self.q, 1), 0.0)
        return G.u[edge].copy(), G.v[edge].copy(), cw[edge], edge

    def __repr__(self):
        return f"IsotropicView(n={self.graph.n}, m={self.graph.m}, m_prime={self.m_prime}, lambda={self.lambda_:.6g})"


def build_isotropic_view(G: WeightedGraph, oracle: ResistanceOracle, lam=None) -> IsotropicView:
    """Copy counts for ``G`` from the leverage estimates of ``oracle``.

    ``lam=None`` uses the 1-norm of the estimates, the smallest value for
    which the copy-count and marginal bounds hold.
    """
    lev = leverage_scores(G, oracle)
    lam = lev.lambda_ if lam is None else float(lam)
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if lam < lev.lambda_ * (1.0 - 1e-12):
        warnings.warn(
            f"lambda={lam:.6g} is below the leverage 1-norm {lev.lambda_:.6g}; "
            "the copy-count and marginal bounds are not guaranteed",
            stacklevel=2,
        )
    q = copy_counts(lev.values, G.m, lam)
    offsets = np.concatenate([[0], np.cumsum(q)[:-1]]).astype(np.int64)
    return IsotropicView(G, lev, lam, q, offsets)


@dataclass
class MarginalBoundReport:
    m: int
    m_prime: int
    lambda_: float
    max_marginal: float
    marginal_bound: float
    leverage_norm: float

    @property
    def size_ok(self) -> bool:
        return self.lambda_ < self.leverage_norm * (1 - 1e-12) or self.m_prime <= 2 * self.m

    @property
    def marginal_ok(self) -> bool:
        return self.max_marginal <= self.marginal_bound * (1.0 + 1e-9)

    @property
    def ok(self) -> bool:
        return self.size_ok and self.marginal_ok


def marginal_bound_check(view: IsotropicView) -> MarginalBoundReport:
    """Exact per-copy marginals ``w_e R_e / q_e`` against ``lambda / m``."""
    G = view.graph
    exact = build_exact_oracle(G)
    pos = np.flatnonzero(view.q > 0)
    marg = G.w[pos] * exact.query_pairs(G.u[pos], G.v[pos]) / view.q[pos]
    return MarginalBoundReport(
        m=G.m,
        m_prime=view.m_prime,
        lambda_=view.lambda_,
        max_marginal=float(marg.max()) if marg.size else 0.0,
        marginal_bound=view.lambda_ / G.m,
        leverage_norm=view.leverage.lambda_,
    )


def label_tree(view: IsotropicView, tree) -> tuple[LabeledEdge, ...]:
    """Attach copy label 1 to every edge of an unlabelled tree."""
    out = []
    for e in sorted(int(x) for x in tree):
        if view.q[e] < 1:
            raise GraphError(f"edge {e} has no copies in the isotropic view")
        out.append(LabeledEdge(e, 1))
    return tuple(out)


def strip_labels(tree) -> tuple[int, ...]:
    edges = [lab.e for lab in tree]
    if len(set(edges)) != len(edges):
        raise GraphError("labelled tree holds two copies of one edge")
    return tuple(sorted(edges))


def subgraph_construct(view: IsotropicView, tree, extra) -> MultigraphView:
    """Multigraph on the copies ``tree | extra`` with weights ``w_e / q_e``."""
    tree = [LabeledEdge(*lab) for lab in tree]
    extra = [LabeledEdge(*lab) for lab in extra]
    ids_t = [view.copy_id(lab) for lab in tree]
    ids_s = [view.copy_id(lab) for lab in extra]
    if set(ids_t) & set(ids_s):
        raise GraphError("tree and fresh sample overlap")
    if len(set(ids_t)) != len(ids_t) or len(set(ids_s)) != len(ids_s):
        raise GraphError("repeated label")
    labels = tuple(tree + extra)
    G = view.graph
    e = np.array([lab.e for lab in labels], dtype=np.int64)
    w = G.w[e] / view.q[e] if e.size else np.empty(0)
    return MultigraphView(G.n, G.u[e].copy(), G.v[e].copy(), w, labels)


def explicit_multigraph(view: IsotropicView) -> MultigraphView:
    """Materialise every copy; only sensible for tiny graphs."""
    u, v, w, edge = view.copy_arrays()
    labels = tuple(view.label(c) for c in range(view.m_prime))
    return MultigraphView(view.graph.n, u, v, w, labels)
