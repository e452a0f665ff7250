"""Hypercube graphs and random breadth-first spanning trees rooted at node 0."""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np

__all__ = [
    "HypercubeGraph",
    "SpanningTree",
    "Forest",
    "popcount",
    "random_spanning_tree",
    "generate_forest",
    "path_to_root",
    "save_forest",
    "load_forest",
]


def popcount(x: np.ndarray) -> np.ndarray:
    """Hamming weight of every entry of a non-negative integer array."""
    x = np.asarray(x, dtype=np.int64)
    out = np.zeros_like(x)
    while np.any(x):
        out += x & 1
        x = x >> 1
    return out


@dataclass(frozen=True)
class HypercubeGraph:
    """Implicit hypercube graph: nodes ``0 .. 2**n - 1``, edges ``(j, j + 2**k)`` for clear bit ``k``."""

    n_qubits: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("hypercube needs n_qubits >= 1")

    @property
    def n_nodes(self) -> int:
        return 1 << self.n_qubits

    @property
    def n_edges(self) -> int:
        return self.n_qubits << (self.n_qubits - 1)

    def has_edge(self, a: int, b: int) -> bool:
        d = a ^ b
        return d != 0 and d & (d - 1) == 0 and max(a, b) < self.n_nodes

    def edges(self):
        for j in range(self.n_nodes):
            for k in range(self.n_qubits):
                if not j >> k & 1:
                    yield j, j | (1 << k), k


@dataclass(frozen=True, eq=False)
class SpanningTree:
    """Parent-pointer tree over a hypercube; ``label[j]`` is the bit cleared to reach ``parent[j]``.

    ``parent[0]`` and ``label[0]`` are -1.
    """

    n_qubits: int
    parent: np.ndarray
    label: np.ndarray

    def __post_init__(self):
        for name in ("parent", "label"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_parents(cls, n_qubits: int, parent) -> "SpanningTree":
        parent = np.asarray(parent, dtype=np.int64)
        nodes = np.arange(parent.size)
        diff = nodes ^ np.where(parent < 0, 0, parent)
        label = np.where(parent < 0, -1, np.log2(np.maximum(diff, 1)).astype(np.int64))
        tree = cls(n_qubits, parent, label)
        tree.validate()
        return tree

    @property
    def n_nodes(self) -> int:
        return self.parent.size

    @cached_property
    def depth(self) -> np.ndarray:
        """Number of edges from each node to the root, found by walking ancestors."""
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        anc = self.parent.copy()
        for _ in range(self.n_nodes):
            alive = anc >= 0
            if not alive.any():
                return depth
            depth[alive] += 1
            anc[alive] = self.parent[anc[alive]]
        raise ValueError("parent pointers contain a cycle")

    @cached_property
    def layer_order(self) -> np.ndarray:
        """Nodes sorted by Hamming weight; parents always precede children."""
        return np.argsort(popcount(np.arange(self.n_nodes)), kind="stable")

    def validate(self) -> None:
        """Raise ValueError unless this is a depth-bounded spanning tree of the hypercube."""
        n = self.n_nodes
        if n != 1 << self.n_qubits or self.parent[0] != -1:
            raise ValueError("tree must cover 2**n nodes and be rooted at node 0")
        nodes = np.arange(1, n)
        par = self.parent[1:]
        lab = self.label[1:]
        if np.any(lab < 0) or np.any(lab >= self.n_qubits):
            raise ValueError("edge label out of range")
        if np.any((nodes >> lab) & 1 != 1) or np.any(par != nodes - (1 << lab)):
            raise ValueError("each parent must clear one set bit of its child")

    @property
    def n_edges(self) -> int:
        return self.n_nodes - 1

    def __eq__(self, other):
        if not isinstance(other, SpanningTree):
            return NotImplemented
        return self.n_qubits == other.n_qubits and np.array_equal(self.parent, other.parent)

    def __hash__(self):
        return hash((self.n_qubits, self.parent.tobytes()))


@lru_cache(maxsize=None)
def _set_bits(n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    """Hamming weights and, per node, its set bit positions in increasing order (padded with -1)."""
    nodes = np.arange(1 << n_qubits, dtype=np.int64)
    weight = popcount(nodes)
    table = np.full((nodes.size, max(n_qubits, 1)), -1, dtype=np.int64)
    seen = np.zeros(nodes.size, dtype=np.int64)
    for k in range(n_qubits):
        bit = (nodes >> k) & 1
        hit = bit == 1
        table[hit, seen[hit]] = k
        seen += bit
    weight.setflags(write=False)
    table.setflags(write=False)
    return weight, table


class Forest(Sequence):
    """Stack of spanning trees over one hypercube, stored as ``(n_tree, 2**n)`` arrays.

    Indexing yields :class:`SpanningTree` views.
    """

    def __init__(self, n_qubits: int, parent: np.ndarray, label: np.ndarray):
        self.n_qubits = n_qubits
        self.parent = np.asarray(parent, dtype=np.int64)
        self.label = np.asarray(label, dtype=np.int64)

    @classmethod
    def from_trees(cls, trees) -> "Forest":
        if isinstance(trees, Forest):
            return trees
        trees = list(trees)
        if not trees:
            raise ValueError("empty forest")
        n = trees[0].n_qubits
        if any(t.n_qubits != n for t in trees):
            raise ValueError("trees span hypercubes of different sizes")
        return cls(n, np.stack([t.parent for t in trees]), np.stack([t.label for t in trees]))

    def __len__(self) -> int:
        return self.parent.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Forest(self.n_qubits, self.parent[i], self.label[i])
        return SpanningTree(self.n_qubits, self.parent[i], self.label[i])


def _draw_forest(n_qubits: int, n_tree: int, rng: np.random.Generator) -> Forest:
    weight, bits = _set_bits(n_qubits)
    u = rng.random((n_tree, weight.size))
    pick = (u * weight).astype(np.int64)
    nodes = np.arange(weight.size, dtype=np.int64)
    label = bits[nodes, pick]
    label[:, 0] = -1
    parent = nodes - (np.int64(1) << np.maximum(label, 0))
    parent[:, 0] = -1
    return Forest(n_qubits, parent, label)


def random_spanning_tree(graph: HypercubeGraph, seed) -> SpanningTree:
    """Each node of weight ``w`` picks one of its ``w`` lower neighbours uniformly.

    Every node then sits at depth equal to its Hamming weight, so the tree has
    layers of size ``C(n, d)`` and depth at most ``n``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return _draw_forest(graph.n_qubits, 1, rng)[0]


def generate_forest(graph: HypercubeGraph, n_tree: int, seed: int) -> Forest:
    """``n_tree`` independent trees drawn row by row from the stream seeded by ``seed``.

    Tree ``i`` depends only on ``(seed, i)``, so the first ``t`` trees of a larger
    forest equal the forest of size ``t``.
    """
    if n_tree < 1:
        raise ValueError("n_tree must be >= 1")
    return _draw_forest(graph.n_qubits, n_tree, np.random.default_rng([int(seed), graph.n_qubits]))


def path_to_root(tree: SpanningTree, node: int) -> list[tuple[int, int, int]]:
    """Edges ``(child, parent, k)`` walking from ``node`` up to the root."""
    if not 0 <= node < tree.n_nodes:
        raise ValueError(f"node {node} outside tree with {tree.n_nodes} nodes")
    path = []
    j = int(node)
    while j != 0:
        p = int(tree.parent[j])
        path.append((j, p, int(tree.label[j])))
        j = p
    return path


def _cache_key(n_qubits: int, seed: int, n_tree: int) -> str:
    return f"{n_qubits}:{seed}:{n_tree}"


def save_forest(path, forest: Sequence[SpanningTree], seed: int) -> None:
    """Add a forest to a JSON cache file keyed by ``n_qubits:seed:n_tree``."""
    path = Path(path)
    data = json.loads(path.read_text()) if path.exists() else {}
    n = forest[0].n_qubits
    data[_cache_key(n, seed, len(forest))] = [t.parent.tolist() for t in forest]
    path.write_text(json.dumps(data))


def load_forest(path, n_qubits: int, seed: int, n_tree: int) -> Forest | None:
    path = Path(path)
    if not path.exists():
        return None
    entry = json.loads(path.read_text()).get(_cache_key(n_qubits, seed, n_tree))
    if entry is None:
        return None
    return Forest.from_trees(SpanningTree.from_parents(n_qubits, p) for p in entry)
