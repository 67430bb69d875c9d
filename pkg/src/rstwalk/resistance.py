"""Effective-resistance oracles, leverage scores and max-product trees.

Two backends answer ``R(a, b) = (e_a - e_b)^T L^+ (e_a - e_b)``:

* ``exact``: the Laplacian pseudoinverse (dense up to ``DENSE_LIMIT``
  vertices, preconditioned conjugate gradients beyond).
* ``sketch``: a Johnson-Lindenstrauss projection ``Z = Q W^{1/2} B L^+`` with
  ``p = ceil(24 ln n / eps'^2)`` rows of random ``+-1/sqrt(p)`` entries,
  ``eps' = eps / 3``. Squared distances are divided by ``1 - eps'`` so that
  answers overestimate: ``R <= R~ <= (1 + eps) R`` with high probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import ledger as ql
from ._validation import check_epsilon, check_graph, check_rng
from .exceptions import DisconnectedGraphError, SolverError
from .graph import WeightedGraph, is_connected, laplacian_from_arrays

DENSE_LIMIT = 2000
CG_RTOL = 1e-10
SKETCH_CHUNK = 4096


def sketch_rows(n: int, eps: float) -> int:
    """Number of sketch rows for accuracy ``eps`` (uses ``eps' = eps / 3``)."""
    eps_prime = eps / 3.0
    return math.ceil(24.0 * math.log(n) / eps_prime**2)


def _sparse_laplacian(n, u, v, w):
    A = scipy.sparse.coo_matrix((np.r_[w, w], (np.r_[u, v], np.r_[v, u])), shape=(n, n)).tocsr()
    return scipy.sparse.diags(np.asarray(A.sum(axis=1)).ravel()) - A


def solve_laplacian(L, b, rtol=CG_RTOL, maxiter=None):
    """Solve ``L x = b`` for ``b`` orthogonal to the all-ones vector.

    Jacobi-preconditioned conjugate gradients; the result is centred so it is
    the minimum-norm solution ``L^+ b``.
    """
    L = scipy.sparse.csr_matrix(L)
    n = L.shape[0]
    b = np.asarray(b, dtype=float)
    b = b - b.mean()
    if not np.any(b):
        return np.zeros(n)
    d = L.diagonal()
    M = scipy.sparse.diags(1.0 / np.where(d > 0, d, 1.0))
    maxiter = maxiter or 10 * n
    x, info = scipy.sparse.linalg.cg(L, b, rtol=rtol, atol=0.0, M=M, maxiter=maxiter)
    if info != 0:
        raise SolverError(f"conjugate gradients did not converge in {maxiter} iterations")
    return x - x.mean()


def pseudoinverse(L: np.ndarray) -> np.ndarray:
    """Dense ``L^+`` of a connected Laplacian via ``(L + J/n)^{-1} - J/n``."""
    n = L.shape[0]
    J = np.full((n, n), 1.0 / n)
    return np.linalg.inv(L + J) - J


class ResistanceOracle:
    """Answers (approximate) effective-resistance queries for a fixed graph.

    Built by :func:`build_exact_oracle` or :func:`build_sketch_oracle`;
    immutable afterwards apart from the query counter.
    """

    def __init__(self, mode, n, *, epsilon=0.0, lplus=None, laplacian=None, sketch=None,
                 eps_prime=0.0, ledger=None):
        self.mode = mode
        self.n = n
        self.epsilon = epsilon
        self.eps_prime = eps_prime
        self._lplus = lplus
        self._laplacian = laplacian
        self._sketch = sketch
        self.ledger = ledger
        self.n_queries = 0

    @property
    def n_rows(self) -> int:
        return 0 if self._sketch is None else self._sketch.shape[1]

    def query(self, a: int, b: int) -> float:
        return float(self.query_pairs([a], [b])[0])

    def query_pairs(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        self.n_queries += a.size
        if self.mode == "sketch":
            diff = self._sketch[a] - self._sketch[b]
            return np.einsum("ij,ij->i", diff, diff) / (1.0 - self.eps_prime)
        if self._lplus is not None:
            P = self._lplus
            return P[a, a] + P[b, b] - 2.0 * P[a, b]
        out = np.empty(a.size)
        for i, (x, y) in enumerate(zip(a.tolist(), b.tolist())):
            if x == y:
                out[i] = 0.0
                continue
            rhs = np.zeros(self.n)
            rhs[x], rhs[y] = 1.0, -1.0
            sol = solve_laplacian(self._laplacian, rhs)
            out[i] = sol[x] - sol[y]
        return out

    def all_pairs(self) -> np.ndarray:
        ia, ib = np.triu_indices(self.n, k=1)
        R = np.zeros((self.n, self.n))
        R[ia, ib] = R[ib, ia] = self.query_pairs(ia, ib)
        return R

    def __repr__(self):
        extra = f", epsilon={self.epsilon}, rows={self.n_rows}" if self.mode == "sketch" else ""
        return f"ResistanceOracle(mode={self.mode!r}, n={self.n}{extra})"


def _positive_part(G: WeightedGraph):
    keep = G.w > 0
    return G.u[keep], G.v[keep], G.w[keep]


def build_exact_oracle(G: WeightedGraph, ledger=None) -> ResistanceOracle:
    G = check_graph(G)
    if not is_connected(G):
        raise DisconnectedGraphError("resistance oracle needs a graph connected on positive weights")
    u, v, w = _positive_part(G)
    if G.n <= DENSE_LIMIT:
        lplus = pseudoinverse(laplacian_from_arrays(G.n, u, v, w))
        return ResistanceOracle("exact", G.n, lplus=lplus, ledger=ledger)
    return ResistanceOracle("exact", G.n, laplacian=_sparse_laplacian(G.n, u, v, w), ledger=ledger)


def build_sketch_oracle(G: WeightedGraph, epsilon: float = 0.1, random_state=None,
                        ledger=None) -> ResistanceOracle:
    G = check_graph(G)
    eps = check_epsilon(epsilon, low=0.0, high=1.0 / 3.0)
    if not is_connected(G):
        raise DisconnectedGraphError("resistance oracle needs a graph connected on positive weights")
    rng = check_rng(random_state)
    n = G.n
    u, v, w = _positive_part(G)
    eps_prime = eps / 3.0
    if n < 2:
        return ResistanceOracle("sketch", n, epsilon=eps, sketch=np.zeros((n, 1)),
                                eps_prime=eps_prime, ledger=ledger)
    p = sketch_rows(n, eps)

    # C = W^{1/2} B, one row per positive-weight edge
    mpos = len(w)
    C = np.zeros((mpos, n))
    sw = np.sqrt(w)
    C[np.arange(mpos), u] = sw
    C[np.arange(mpos), v] = -sw

    Y = np.empty((p, n))
    for start in range(0, p, SKETCH_CHUNK):
        stop = min(p, start + SKETCH_CHUNK)
        signs = rng.integers(0, 2, size=(stop - start, mpos), dtype=np.int8)
        Q = signs.astype(np.float64) * 2.0 - 1.0
        Y[start:stop] = Q @ C
    Y /= math.sqrt(p)

    # rows of Z are Y L^+; store Z^T (n x p) so vertex lookups are contiguous
    if n <= DENSE_LIMIT:
        L = laplacian_from_arrays(n, u, v, w)
        factor = scipy.linalg.cho_factor(L[1:, 1:])
        Zt = np.zeros((n, p))
        Zt[1:] = scipy.linalg.cho_solve(factor, Y[:, 1:].T)
    else:
        L = _sparse_laplacian(n, u, v, w)
        Zt = np.column_stack([solve_laplacian(L, row) for row in Y])
    return ResistanceOracle("sketch", n, epsilon=eps, sketch=np.ascontiguousarray(Zt),
                            eps_prime=eps_prime, ledger=ledger)


@dataclass(frozen=True)
class LeverageVector:
    values: np.ndarray
    lambda_: float

    def __len__(self):
        return len(self.values)


def leverage_scores(G: WeightedGraph, oracle: ResistanceOracle) -> LeverageVector:
    """Per-edge ``w_e * R~_e``; zero-weight edges score exactly 0."""
    vals = np.zeros(G.m)
    pos = np.flatnonzero(G.w > 0)
    if pos.size:
        vals[pos] = G.w[pos] * oracle.query_pairs(G.u[pos], G.v[pos])
    return LeverageVector(vals, float(math.fsum(vals)))


def max_product_spanning_tree(G: WeightedGraph, ledger=None) -> tuple[int, ...]:
    """Spanning tree maximising the product of edge weights.

    Greedy (Kruskal) on keys ``log w_e`` over positive-weight edges, scanning
    larger keys first and breaking ties by smaller edge index.
    """
    G = check_graph(G)
    pos = np.flatnonzero(G.w > 0)
    keys = np.log(G.w[pos])
    order = pos[np.lexsort((pos, -keys))]
    parent = list(range(G.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree = []
    for e in order.tolist():
        ra, rb = find(int(G.u[e])), find(int(G.v[e]))
        if ra != rb:
            parent[ra] = rb
            tree.append(e)
            if len(tree) == G.n - 1:
                break
    if len(tree) != G.n - 1:
        raise DisconnectedGraphError("positive-weight subgraph is disconnected")
    if ledger is not None:
        ledger.record(ql.TREE_INIT, calls=G.m, charged=ql.tree_init_cost(G.m, G.n))
    return tuple(sorted(tree))


class EffectiveResistance(BaseEstimator):
    """Estimator wrapper around the resistance oracles.

    Parameters
    ----------
    method : {"exact", "sketch"}
    epsilon : float
        Sketch accuracy in (0, 1/3); ignored for ``method="exact"``.
    random_state : int, Generator or None

    Attributes
    ----------
    oracle_ : ResistanceOracle
    leverage_ : LeverageVector
        Leverage-score (over)estimates of the fitted graph's edges.
    """

    def __init__(self, method="sketch", epsilon=0.1, random_state=None):
        self.method = method
        self.epsilon = epsilon
        self.random_state = random_state

    def fit(self, G, y=None, ledger=None):
        G = check_graph(G)
        if self.method == "exact":
            self.oracle_ = build_exact_oracle(G, ledger=ledger)
        elif self.method == "sketch":
            self.oracle_ = build_sketch_oracle(G, self.epsilon, self.random_state, ledger=ledger)
            if ledger is not None:
                ledger.record(ql.ORACLE_INIT, calls=G.m,
                              charged=ql.oracle_init_cost(G.m, G.n, self.oracle_.epsilon))
        else:
            raise ValueError(f"unknown method {self.method!r}; use 'exact' or 'sketch'")
        self.graph_ = G
        self.leverage_ = leverage_scores(G, self.oracle_)
        return self

    def transform(self, pairs):
        """Resistances for an ``(k, 2)`` array of vertex pairs."""
        check_is_fitted(self, "oracle_")
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        return self.oracle_.query_pairs(pairs[:, 0], pairs[:, 1])

    def edge_resistances(self):
        check_is_fitted(self, "oracle_")
        G = self.graph_
        return self.oracle_.query_pairs(G.u, G.v)
