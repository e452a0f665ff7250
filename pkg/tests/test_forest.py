"""Hypercube graph facts and random BFS spanning trees."""

from collections import Counter
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hrftomo.forest import (
    Forest,
    HypercubeGraph,
    SpanningTree,
    generate_forest,
    load_forest,
    path_to_root,
    popcount,
    random_spanning_tree,
    save_forest,
)


def check_tree(tree: SpanningTree):
    """Independent reachability/depth check by walking parent pointers in Python."""
    n = tree.n_qubits
    for j in range(1, tree.n_nodes):
        seen, node, steps = set(), j, 0
        while node != 0:
            assert node not in seen
            seen.add(node)
            k = int(tree.label[node])
            assert node >> k & 1 and int(tree.parent[node]) == node - (1 << k)
            node = int(tree.parent[node])
            steps += 1
        assert steps == bin(j).count("1") <= n


class TestHypercube:
    @pytest.mark.parametrize("n", range(1, 9))
    def test_edge_count(self, n):
        g = HypercubeGraph(n)
        edges = list(g.edges())
        assert len(edges) == g.n_edges == n * 2 ** (n - 1)
        assert len(set((a, b) for a, b, _ in edges)) == len(edges)

    def test_q5(self):
        g = HypercubeGraph(5)
        assert (g.n_nodes, g.n_edges) == (32, 80)

    def test_edge_iff_power_of_two(self):
        g = HypercubeGraph(4)
        for a in range(16):
            for b in range(16):
                d = abs(a - b)
                hamming_one = bin(a ^ b).count("1") == 1
                assert g.has_edge(a, b) == hamming_one
                if hamming_one:
                    assert d & (d - 1) == 0

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            HypercubeGraph(0)


class TestRandomTree:
    def test_one_qubit(self):
        tree = random_spanning_tree(HypercubeGraph(1), 0)
        assert tree.parent.tolist() == [-1, 0]

    def test_five_qubit_edge_count(self):
        tree = random_spanning_tree(HypercubeGraph(5), 3)
        assert tree.n_edges == 31

    def test_uniform_parent_choice(self):
        g = HypercubeGraph(3)
        freq = Counter(int(random_spanning_tree(g, s).parent[7]) for s in range(10**4))
        assert set(freq) == {3, 5, 6}
        for p in (3, 5, 6):
            assert abs(freq[p] / 1e4 - 1 / 3) <= 0.02

    @given(st.integers(1, 8), st.integers(0, 2**32 - 1))
    def test_invariants(self, n, seed):
        tree = random_spanning_tree(HypercubeGraph(n), seed)
        tree.validate()
        np.testing.assert_array_equal(tree.depth, popcount(np.arange(1 << n)))
        layers = np.bincount(tree.depth, minlength=n + 1)
        assert layers.tolist() == [comb(n, d) for d in range(n + 1)]

    @pytest.mark.parametrize("n", [2, 4, 6])
    def test_python_walk_oracle(self, n):
        check_tree(random_spanning_tree(HypercubeGraph(n), n))

    def test_deterministic(self):
        g = HypercubeGraph(6)
        assert random_spanning_tree(g, 9) == random_spanning_tree(g, 9)

    def test_from_parents_rejects_non_edges(self):
        with pytest.raises(ValueError):
            SpanningTree.from_parents(2, [-1, 0, 0, 0])

    def test_cycle_detected(self):
        tree = SpanningTree(2, np.array([-1, 3, 0, 1]), np.array([-1, 0, 1, 1]))
        with pytest.raises(ValueError):
            _ = tree.depth


class TestForest:
    def test_singleton(self):
        forest = generate_forest(HypercubeGraph(3), 1, 0)
        assert len(forest) == 1 and isinstance(forest[0], SpanningTree)

    def test_eleven_valid_trees(self):
        forest = generate_forest(HypercubeGraph(5), 11, 0)
        assert len(forest) == 11
        for tree in forest:
            tree.validate()
            check_tree(tree)

    def test_distinct_trees(self):
        forest = generate_forest(HypercubeGraph(4), 300, 0)
        assert len(set(forest)) >= 2

    def test_prefix_property(self):
        g = HypercubeGraph(5)
        big = generate_forest(g, 31, 4)
        small = generate_forest(g, 11, 4)
        assert all(a == b for a, b in zip(big[:11], small))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            generate_forest(HypercubeGraph(3), 0, 0)

    def test_from_trees_round_trip(self):
        forest = generate_forest(HypercubeGraph(4), 5, 1)
        again = Forest.from_trees(list(forest))
        np.testing.assert_array_equal(again.parent, forest.parent)

    def test_cache_round_trip(self, tmp_path):
        path = tmp_path / "forest.json"
        forest = generate_forest(HypercubeGraph(4), 7, 2)
        assert load_forest(path, 4, 2, 7) is None
        save_forest(path, forest, 2)
        save_forest(path, generate_forest(HypercubeGraph(3), 2, 0), 0)
        loaded = load_forest(path, 4, 2, 7)
        np.testing.assert_array_equal(loaded.parent, forest.parent)
        np.testing.assert_array_equal(loaded.label, forest.label)
        assert load_forest(path, 4, 2, 8) is None


class TestPathToRoot:
    def test_root(self):
        assert path_to_root(random_spanning_tree(HypercubeGraph(3), 0), 0) == []

    def test_weight_one(self):
        assert path_to_root(random_spanning_tree(HypercubeGraph(3), 0), 4) == [(4, 0, 2)]

    def test_chain(self):
        tree = random_spanning_tree(HypercubeGraph(5), 1)
        path = path_to_root(tree, 31)
        assert len(path) == 5
        assert path[-1][1] == 0
        for (c0, p0, k), (c1, _, _) in zip(path, path[1:]):
            assert p0 == c1
        for c, p, k in path:
            assert c - p == 1 << k

    def test_length_histogram(self):
        tree = random_spanning_tree(HypercubeGraph(4), 5)
        hist = Counter(len(path_to_root(tree, j)) for j in range(16))
        assert [hist[d] for d in range(5)] == [1, 4, 6, 4, 1]

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            path_to_root(random_spanning_tree(HypercubeGraph(2), 0), 4)
