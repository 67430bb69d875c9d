import itertools

import numpy as np
import pytest

from rstwalk.exact import count_weighted_trees, enumerate_trees
from rstwalk.exceptions import GraphError
from rstwalk.gadget import (
    RecoveryError,
    all_search_matrices,
    build_gadget,
    check_search_matrix,
    planted_tree,
    recover_matrix,
    refined_success_probability,
)
from rstwalk.graph import is_connected, weight_product
from rstwalk.resistance import max_product_spanning_tree


def test_identity_gadget():
    G = build_gadget(np.eye(2, dtype=int))
    assert G.n == 5 and G.m == 6
    positive = {(int(a), int(b)) for a, b, w in G.edges if w > 0}
    assert positive == {(0, 1), (0, 2), (1, 3), (2, 4)}
    assert is_connected(G, positive_only=True)


def test_single_entry_is_a_path():
    G = build_gadget([[1]])
    assert G.edges == [(0, 1, 1.0), (1, 2, 1.0)]
    assert enumerate_trees(G) == [((0, 1), 1.0)]


def test_refined_weights():
    G = build_gadget(np.eye(2, dtype=int), refined=True)
    assert sorted(set(G.w.tolist())) == [1 / 16, 1.0]


def test_invalid_matrices():
    for M in ([[1, 1]], [[0, 0]], [[2]], [], [[1], [0]]):
        with pytest.raises(GraphError):
            check_search_matrix(M)


def test_all_search_matrices_count():
    ms = list(all_search_matrices(2, 3))
    assert len(ms) == 9 and len({m.tobytes() for m in ms}) == 9


def test_planted_tree_is_the_whole_support():
    for n, k in itertools.product(range(1, 4), repeat=2):
        for M in all_search_matrices(n, k):
            G = build_gadget(M)
            assert G.n == n + k + 1 and int((G.w > 0).sum()) == n + k
            assert enumerate_trees(G) == [(planted_tree(M), 1.0)]
            assert max_product_spanning_tree(G) == planted_tree(M)
            np.testing.assert_array_equal(recover_matrix(planted_tree(M), n, k), M)


def test_recover_errors():
    M = np.eye(2, dtype=int)
    with pytest.raises(RecoveryError):
        recover_matrix((0, 1, 2), 2, 2)
    with pytest.raises(RecoveryError):
        recover_matrix((0, 2, 3, 4), 2, 2)  # r_1 gets two left neighbours, r_2 none
    with pytest.raises(RecoveryError):
        recover_matrix((0, 1, 2, 99), 2, 2)
    np.testing.assert_array_equal(recover_matrix(planted_tree(M), 2, 2), M)


def test_refined_probability_is_planted_tree_share():
    rng = np.random.default_rng(0)
    for _ in range(5):
        n, k = rng.integers(1, 4, size=2)
        M = np.zeros((n, k), int)
        M[np.arange(n), rng.integers(0, k, size=n)] = 1
        G = build_gadget(M, refined=True)
        p_enum = sum(p for t, p in enumerate_trees(G)
                     if _recovers(t, M))
        assert refined_success_probability(M) == pytest.approx(p_enum, rel=1e-9)
        assert weight_product(G, planted_tree(M)) / count_weighted_trees(G) == pytest.approx(p_enum, rel=1e-9)


def _recovers(tree, M):
    try:
        return np.array_equal(recover_matrix(tree, *M.shape), M)
    except RecoveryError:
        return False
