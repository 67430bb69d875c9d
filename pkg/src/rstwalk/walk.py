"""Large-step down-up walk over spanning trees of the isotropic multigraph.

One iteration from the labelled tree ``T``:

1. draw ``k`` fresh copies uniformly from the copies outside ``T``;
2. sample a weighted-uniform spanning tree of ``T`` plus the fresh copies.

The walk starts from the maximum weight-product tree (every edge labelled
with copy 1) and returns the final tree with labels stripped.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _kernels
from . import ledger as ql
from ._validation import check_epsilon, check_graph, check_rng
from .exact import MultigraphView, enumerate_trees, wilson_sample
from .exceptions import GraphError, SamplingError
from .graph import WeightedGraph
from .isotropic import (
    IsotropicView,
    build_isotropic_view,
    explicit_multigraph,
    label_tree,
    strip_labels,
    subgraph_construct,
)
from .ledger import QueryLedger
from .multisample import iso_sample
from .resistance import EffectiveResistance, build_exact_oracle, max_product_spanning_tree

logger = logging.getLogger(__name__)

CHUNK_SIZE = 1024
MAX_EXPLICIT_GROUND = 12


def default_iterations(n: int, epsilon: float, C: float = 2.0) -> int:
    """``ceil(C ln^3(n + 2) ln(2 / epsilon))``."""
    return max(1, math.ceil(C * math.log(n + 2) ** 3 * math.log(2.0 / epsilon)))


@dataclass(frozen=True)
class WalkConfig:
    epsilon: float = 0.05
    k_fresh: Optional[int] = None
    n_iter: Optional[int] = None
    C: float = 2.0
    seed: Optional[int] = None
    lambda_mode: str = "norm"
    oracle: str = "sketch"
    oracle_epsilon: float = 0.1

    def __post_init__(self):
        check_epsilon(self.epsilon)
        if self.k_fresh is not None and self.k_fresh < 1:
            raise ValueError("k_fresh must be at least 1")
        if self.n_iter is not None and self.n_iter < 1:
            raise ValueError("n_iter must be at least 1")
        if self.lambda_mode not in ("norm", "n"):
            raise ValueError("lambda_mode must be 'norm' or 'n'")


@dataclass
class WalkState:
    tree: tuple
    iteration: int = 0
    ledger: QueryLedger = field(default_factory=QueryLedger)


def _run_chunk(args, seed, count, snaps):
    rng = np.random.default_rng(seed)
    return _kernels.walk_batch(*args, snaps, count, rng)


class DownUpTreeSampler(BaseEstimator):
    """Weighted-uniform spanning trees from the isotropic down-up walk.

    Parameters
    ----------
    epsilon : float, default=0.05
        Target total-variation accuracy; sets the default iteration count.
    n_iter : int, optional
        Walk length. Defaults to ``ceil(C ln^3(n + 2) ln(2 / epsilon))``.
    C : float, default=2.0
        Constant in the default walk length.
    k_fresh : int, optional
        Fresh copies per up-step, default ``2n``; clipped to the number of
        copies outside the current tree.
    lambda_mode : {"norm", "n"}
        Divisor in the copy counts: the leverage 1-norm or the vertex count.
    oracle : {"sketch", "exact"}
    oracle_epsilon : float, default=0.1
    random_state : int, Generator or None
    n_jobs : int, optional
        Worker processes for :meth:`sample`. Output does not depend on it.

    Attributes
    ----------
    view_ : IsotropicView
    initial_tree_ : tuple of LabeledEdge
    n_iter_ : int
    k_fresh_ : int
    ledger_ : QueryLedger
    """

    def __init__(self, epsilon=0.05, n_iter=None, C=2.0, k_fresh=None, lambda_mode="norm",
                 oracle="sketch", oracle_epsilon=0.1, random_state=None, n_jobs=None):
        self.epsilon = epsilon
        self.n_iter = n_iter
        self.C = C
        self.k_fresh = k_fresh
        self.lambda_mode = lambda_mode
        self.oracle = oracle
        self.oracle_epsilon = oracle_epsilon
        self.random_state = random_state
        self.n_jobs = n_jobs

    @classmethod
    def from_config(cls, cfg: WalkConfig, **kw) -> "DownUpTreeSampler":
        return cls(epsilon=cfg.epsilon, n_iter=cfg.n_iter, C=cfg.C, k_fresh=cfg.k_fresh,
                   lambda_mode=cfg.lambda_mode, oracle=cfg.oracle,
                   oracle_epsilon=cfg.oracle_epsilon, random_state=cfg.seed, **kw)

    def fit(self, G, y=None):
        cfg = WalkConfig(epsilon=self.epsilon, k_fresh=self.k_fresh, n_iter=self.n_iter, C=self.C,
                         lambda_mode=self.lambda_mode, oracle=self.oracle,
                         oracle_epsilon=self.oracle_epsilon)
        G = check_graph(G, connected=True)
        if G.n < 2:
            raise GraphError("the walk needs at least two vertices")
        self._rng = check_rng(self.random_state)
        self.ledger_ = QueryLedger()
        with self.ledger_.timer(ql.ORACLE_INIT):
            resist = EffectiveResistance(cfg.oracle, cfg.oracle_epsilon, self._rng)
            resist.fit(G, ledger=self.ledger_)
        self.oracle_ = resist.oracle_
        lam = None if cfg.lambda_mode == "norm" else float(G.n)
        self.view_ = build_isotropic_view(G, self.oracle_, lam)
        with self.ledger_.timer(ql.TREE_INIT):
            self.initial_tree_ = label_tree(self.view_, max_product_spanning_tree(G, self.ledger_))

        n, m = G.n, G.m
        self.n_iter_ = cfg.n_iter or default_iterations(n, cfg.epsilon, cfg.C)
        free = self.view_.m_prime - (n - 1)
        self.k_fresh_ = min(cfg.k_fresh or 2 * n, free)
        if m < 1000 * n or self.view_.lambda_ > 2 * n:
            logger.info("mixing-time hypothesis m >= 1000 n, lambda <= 2 n fails (n=%d, m=%d, "
                        "lambda=%.3g); correctness is unaffected", n, m, self.view_.lambda_)
        self.graph_ = G
        self._copies = self.view_.copy_arrays()
        return self

    def _kernel_args(self):
        cu, cv, cw, edge = self._copies
        view = self.view_
        init = np.array([view.copy_id(lab) for lab in self.initial_tree_], dtype=np.int64)
        return (self.graph_.n, cu, cv, cw, edge, view.q, view.offsets, init, self.k_fresh_)

    def sample(self, n_samples=1, random_state=None, snapshots=None):
        """Run ``n_samples`` independent walks.

        Returns an ``(n_samples, n - 1)`` array of sorted edge indices, or
        ``(n_samples, len(snapshots), n - 1)`` when ``snapshots`` lists the
        iteration counts at which to record each walk.
        """
        check_is_fitted(self, "view_")
        rng = self._rng if random_state is None else check_rng(random_state)
        n_samples = int(n_samples)
        snaps = np.array([self.n_iter_] if snapshots is None else sorted(set(int(s) for s in snapshots)),
                         dtype=np.int64)
        if snaps.size == 0 or snaps[0] < 0:
            raise ValueError("snapshots must be nonnegative iteration counts")
        n_chunks = -(-n_samples // CHUNK_SIZE)
        seeds = rng.integers(0, 2**63, size=n_chunks)
        sizes = [min(CHUNK_SIZE, n_samples - i * CHUNK_SIZE) for i in range(n_chunks)]
        args = self._kernel_args()
        with self.ledger_.timer(ql.ISO_SAMPLE):
            if self.n_jobs in (None, 1) or n_chunks <= 1:
                results = [_run_chunk(args, s, c, snaps) for s, c in zip(seeds, sizes)]
            else:
                results = Parallel(n_jobs=self.n_jobs)(
                    delayed(_run_chunk)(args, s, c, snaps) for s, c in zip(seeds, sizes))
        draws = 0
        for _, d, status in results:
            draws += int(d)
            if status:
                raise SamplingError("subset draw exhausted its batch budget")
        steps = n_samples * int(snaps[-1])
        k = self.k_fresh_
        if k > 0:
            self.ledger_.record(ql.ISO_SAMPLE, calls=draws, invocations=steps,
                                charged=steps * ql.iso_sample_cost(self.view_.m_prime, k))
        trees = (np.concatenate([t for t, _, _ in results]) if results
                 else np.empty((0, snaps.size, self.graph_.n - 1), np.int64))
        return trees[:, 0, :] if snapshots is None else trees

    def charged_total(self, n_samples: int, n_iter: Optional[int] = None) -> float:
        """Closed-form ledger total after fitting and ``n_samples`` walks."""
        check_is_fitted(self, "view_")
        G = self.graph_
        M = self.n_iter_ if n_iter is None else n_iter
        total = ql.tree_init_cost(G.m, G.n)
        if self.oracle == "sketch":
            total += ql.oracle_init_cost(G.m, G.n, self.oracle_epsilon)
        if self.k_fresh_ > 0:
            total += n_samples * M * ql.iso_sample_cost(self.view_.m_prime, self.k_fresh_)
        return total


def qrst(G: WeightedGraph, cfg: WalkConfig = WalkConfig()) -> tuple[int, ...]:
    """One spanning tree from a fresh walk on ``G``."""
    sampler = DownUpTreeSampler.from_config(cfg).fit(G)
    return tuple(int(e) for e in sampler.sample(1)[0])


def walk_step(state: WalkState, view: IsotropicView, cfg: WalkConfig, random_state=None) -> WalkState:
    """One up-step plus down-step, through the public subroutines.

    Reference path for tests; :class:`DownUpTreeSampler` runs the same steps
    in compiled code.
    """
    rng = check_rng(random_state)
    n = view.graph.n
    free = view.m_prime - (n - 1)
    k = min(cfg.k_fresh or 2 * n, free)
    fresh = iso_sample(view, state.tree, k, rng, ledger=state.ledger)
    H = subgraph_construct(view, state.tree, fresh)
    if not H.is_connected():
        raise AssertionError("subgraph lost connectivity although it contains the current tree")
    tree = wilson_sample(H, rng)
    strip_labels(tree)
    return replace(state, tree=tree, iteration=state.iteration + 1)


def subsets(m: int, k: int) -> list[tuple[int, ...]]:
    """Row/column order used by the explicit operators: lexicographic k-subsets of range(m)."""
    return list(itertools.combinations(range(m), k))


def _guard(m):
    if m > MAX_EXPLICIT_GROUND:
        raise ValueError(f"explicit operators are limited to ground sets of size <= {MAX_EXPLICIT_GROUND}")


def down_operator(m: int, k: int, l: int) -> np.ndarray:
    """Row-stochastic ``D[S, T] = 1 / C(k, l)`` for ``T`` a subset of ``S``."""
    _guard(m)
    if not 0 <= l <= k <= m:
        raise ValueError("need 0 <= l <= k <= m")
    rows, cols = subsets(m, k), subsets(m, l)
    col_index = {c: i for i, c in enumerate(cols)}
    D = np.zeros((len(rows), len(cols)))
    x = 1.0 / math.comb(k, l)
    for i, S in enumerate(rows):
        for T in itertools.combinations(S, l):
            D[i, col_index[T]] = x
    return D


def up_operator(mu, m: int, k: int, l: int, strict: bool = True) -> np.ndarray:
    """``U[T, S] = mu(S) / sum_{S' >= T} mu(S')`` for ``T`` a subset of ``S``.

    ``mu`` is indexed by :func:`subsets` ``(m, k)``. Rows whose ``T`` lies in
    no set of the support are all-zero; with ``strict`` they raise.
    """
    _guard(m)
    mu = np.asarray(mu, dtype=float)
    rows, cols = subsets(m, l), subsets(m, k)
    if mu.shape != (len(cols),):
        raise ValueError(f"mu must have length C({m},{k}) = {len(cols)}")
    if abs(mu.sum() - 1.0) > 1e-9 or np.any(mu < 0):
        raise ValueError("mu must be a probability vector")
    row_index = {r: i for i, r in enumerate(rows)}
    U = np.zeros((len(rows), len(cols)))
    for j, S in enumerate(cols):
        if mu[j] > 0:
            for T in itertools.combinations(S, l):
                U[row_index[T], j] = mu[j]
    tot = U.sum(axis=1)
    dead = tot == 0
    if strict and dead.any():
        raise ValueError(f"{int(dead.sum())} rows have no extension inside the support of mu")
    U[~dead] /= tot[~dead, None]
    return U


@dataclass
class ChainReport:
    states: list
    stationary: np.ndarray
    P: np.ndarray
    stationarity_residual: float
    complement_residual: float
    row_sum_residual: float
    tv_curve: np.ndarray
    limit_residual: float

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.tv_curve) <= 1e-12))

    @property
    def ok(self) -> bool:
        return (self.stationarity_residual < 1e-10 and self.complement_residual < 1e-10
                and self.row_sum_residual < 1e-10 and self.monotone)


def transition_matrix(H: MultigraphView, t: int):
    """Explicit large-step chain on spanning trees of the multigraph ``H``.

    From ``S0``: add ``t - (n-1)`` uniform copies outside ``S0``, then draw a
    weighted-uniform tree inside the union. Returns ``(states, mu, P)``.
    """
    _guard(H.size)
    k = H.n - 1
    fresh = t - k
    if fresh < 1 or t > H.size:
        raise ValueError(f"need n <= t <= {H.size}")
    enum = enumerate_trees(H)
    states = [frozenset(s) for s, _ in enum]
    mu = np.array([p for _, p in enum])
    ground = frozenset(range(H.size))
    P = np.zeros((len(states), len(states)))
    for i, S0 in enumerate(states):
        outside = sorted(ground - S0)
        ways = math.comb(len(outside), fresh)
        for T in itertools.combinations(outside, fresh):
            union = S0 | set(T)
            inside = [j for j, S in enumerate(states) if S <= union]
            z = mu[inside].sum()
            P[i, inside] += mu[inside] / z / ways
    return states, mu, P


def _complement_matrix(states, mu, m, k, t):
    """Same chain assembled from the down/up operators on complements."""
    comp_sets = subsets(m, m - k)
    comp_index = {c: i for i, c in enumerate(comp_sets)}
    mubar = np.zeros(len(comp_sets))
    ground = frozenset(range(m))
    pos = [comp_index[tuple(sorted(ground - S))] for S in states]
    mubar[pos] = mu
    Pbar = down_operator(m, m - k, m - t) @ up_operator(mubar, m, m - k, m - t, strict=False)
    return Pbar[np.ix_(pos, pos)]


def chain_stationarity_check(G: WeightedGraph, t: Optional[int] = None, lam=None,
                             steps: int = 30) -> ChainReport:
    """Build the walk's transition matrix on the explicit isotropic multigraph
    of a tiny graph and check stationarity and convergence.

    ``t`` is the total size of the extended set (tree plus fresh copies);
    defaults to ``n + 1``, capped at the number of copies.
    """
    G = check_graph(G, connected=True)
    view = build_isotropic_view(G, build_exact_oracle(G), lam)
    H = explicit_multigraph(view)
    t = min(G.n + 1, H.size) if t is None else int(t)
    states, mu, P = transition_matrix(H, t)
    Pc = _complement_matrix(states, mu, H.size, G.n - 1, t)

    start = frozenset(view.copy_id(lab) for lab in label_tree(view, max_product_spanning_tree(G)))
    x = np.zeros(len(states))
    x[states.index(start)] = 1.0
    tv = []
    for _ in range(steps + 1):
        tv.append(0.5 * np.abs(x - mu).sum())
        x = x @ P
    Ps = np.linalg.matrix_power(P, steps)
    return ChainReport(
        states=states,
        stationary=mu,
        P=P,
        stationarity_residual=float(np.abs(mu @ P - mu).max()),
        complement_residual=float(np.abs(P - Pc).max()),
        row_sum_residual=float(np.abs(P.sum(axis=1) - 1).max()),
        tv_curve=np.array(tv),
        limit_residual=float(np.abs(Ps - mu[None, :]).max()),
    )
