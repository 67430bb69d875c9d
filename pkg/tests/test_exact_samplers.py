import math
from collections import Counter

import networkx as nx
import numpy as np
import pytest

from conftest import brute_force_trees
from rstwalk.exceptions import DisconnectedGraphError, EnumerationLimitError
from rstwalk.exact import (
    ExactTreeSampler,
    MultigraphView,
    aldous_broder_sample,
    count_weighted_trees,
    enumerate_trees,
    wilson_sample,
)
from rstwalk.generators import complete_graph, path_graph, random_small_graph, star_graph
from rstwalk.graph import LabeledEdge, WeightedGraph, is_spanning_tree, weight_product
from rstwalk.resistance import build_exact_oracle
from rstwalk.verify import EmpiricalDistribution, tv_distance


def test_enumerate_examples(triangle, weighted_triangle, k4):
    tri = enumerate_trees(triangle)
    assert [t for t, _ in tri] == [(0, 1), (0, 2), (1, 2)]
    assert all(p == pytest.approx(1 / 3) for _, p in tri)
    probs = [p for _, p in enumerate_trees(weighted_triangle)]
    np.testing.assert_allclose(probs, [6 / 11, 3 / 11, 2 / 11], rtol=1e-12)
    both = enumerate_trees(k4)
    assert len(both) == 16 and all(p == pytest.approx(1 / 16) for _, p in both)


def test_enumerate_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(25):
        G = random_small_graph(rng, max_n=6)
        ours = enumerate_trees(G)
        ref = brute_force_trees(G)
        assert [t for t, _ in ours] == sorted(ref)
        for t, p in ours:
            assert p == pytest.approx(ref[t], rel=1e-12)
        assert math.fsum(p for _, p in ours) == pytest.approx(1.0, abs=1e-12)


def test_enumerate_guards(k4):
    with pytest.raises(EnumerationLimitError):
        enumerate_trees(k4, max_trees=10)
    with pytest.raises(DisconnectedGraphError):
        enumerate_trees(WeightedGraph.from_edges(3, [(0, 1, 1.0)]))


def test_enumerate_skips_zero_weight_trees():
    G = WeightedGraph.from_edges(3, [(0, 1, 1), (1, 2, 1), (0, 2, 0)])
    assert enumerate_trees(G) == [((0, 1), 1.0)]


def test_count_examples(triangle, k4, path3):
    assert count_weighted_trees(k4) == pytest.approx(16)
    assert count_weighted_trees(triangle) == pytest.approx(3)
    assert count_weighted_trees(path3) == pytest.approx(1)
    assert count_weighted_trees(WeightedGraph.from_edges(3, [(0, 1, 1.0)])) == 0.0
    assert count_weighted_trees(complete_graph(6)) == pytest.approx(6**4)


def test_count_equals_enumerated_weight_sum():
    rng = np.random.default_rng(1)
    for _ in range(20):
        G = random_small_graph(rng, max_n=6)
        total = math.fsum(weight_product(G, t) for t in brute_force_trees(G))
        assert count_weighted_trees(G) == pytest.approx(total, rel=1e-9)
        nxg = nx.Graph()
        nxg.add_weighted_edges_from(G.edges)
        assert count_weighted_trees(G) == pytest.approx(nx.number_of_spanning_trees(nxg, weight="weight"),
                                                        rel=1e-9)


def test_enumerated_marginals_are_leverage_scores():
    rng = np.random.default_rng(2)
    for _ in range(10):
        G = random_small_graph(rng, max_n=6)
        freq = np.zeros(G.m)
        for t, p in enumerate_trees(G):
            freq[list(t)] += p
        lev = G.w * build_exact_oracle(G).query_pairs(G.u, G.v)
        np.testing.assert_allclose(freq, lev, atol=1e-9)


def _tv(trees, G):
    return tv_distance(EmpiricalDistribution.from_trees(trees), dict(enumerate_trees(G)))


def test_wilson_triangle_frequencies(triangle):
    trees = ExactTreeSampler("wilson", random_state=0).fit(triangle).sample(30000)
    counts = Counter(map(tuple, trees.tolist()))
    for t in [(0, 1), (0, 2), (1, 2)]:
        assert counts[t] / 30000 == pytest.approx(1 / 3, abs=0.01)


def test_wilson_parallel_copies():
    H = MultigraphView(2, np.array([0, 0]), np.array([1, 1]), np.array([2.0, 1.0]),
                       (LabeledEdge(0, 1), LabeledEdge(0, 2)))
    rng = np.random.default_rng(3)
    hits = sum(wilson_sample(H, rng) == (LabeledEdge(0, 1),) for _ in range(30000))
    assert hits / 30000 == pytest.approx(2 / 3, abs=0.01)


def test_unique_tree_graphs():
    star = star_graph(5)
    assert wilson_sample(star, 0) == (0, 1, 2, 3)
    assert aldous_broder_sample(star, 0) == (0, 1, 2, 3)
    single = path_graph(2)
    assert aldous_broder_sample(single, 1) == (0,)


def test_aldous_broder_examples(triangle, k4):
    for G, n in [(triangle, 30000), (k4, 50000)]:
        trees = ExactTreeSampler("aldous", random_state=4).fit(G).sample(n)
        assert _tv(trees, G) < 0.02


def test_samplers_agree_with_enumeration_on_small_graphs():
    rng = np.random.default_rng(5)
    for _ in range(5):
        G = random_small_graph(rng)
        for method in ("wilson", "aldous"):
            trees = ExactTreeSampler(method, random_state=rng).fit(G).sample(50000)
            assert _tv(trees, G) < 0.02


def test_samplers_reject_disconnected():
    G = WeightedGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 0.0)])
    with pytest.raises(DisconnectedGraphError):
        wilson_sample(G, 0)
    with pytest.raises(DisconnectedGraphError):
        aldous_broder_sample(G, 0)
    with pytest.raises(ValueError):
        ExactTreeSampler("wilson").fit(G)


def test_sampler_outputs_valid_trees_and_is_seeded():
    G = random_small_graph(6, max_n=7)
    a = ExactTreeSampler("wilson", random_state=9).fit(G).sample(200)
    b = ExactTreeSampler("wilson", random_state=9).fit(G).sample(200)
    np.testing.assert_array_equal(a, b)
    assert all(is_spanning_tree(G.n, G.u, G.v, t) for t in a)
    assert ExactTreeSampler("wilson").get_params() == {"method": "wilson", "random_state": None}
