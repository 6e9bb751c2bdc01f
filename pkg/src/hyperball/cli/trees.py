"""Balanced-tree demo data for the hierarchy embedding task."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError


@dataclass(frozen=True)
class TreeSpec:
    """A balanced ``branching``-ary tree of the given depth, BFS-ordered.

    Node 0 is the root; node k > 0 hangs under (k-1) // branching.
    """

    depth: int
    branching: int
    parents: tuple[int, ...] = field(repr=False)

    @property
    def num_nodes(self) -> int:
        return len(self.parents)

    def edges(self) -> list[tuple[int, int]]:
        return [(self.parents[k], k) for k in range(1, self.num_nodes)]

    def node_labels(self) -> list[str]:
        return ["root"] + [f"n{k}" for k in range(1, self.num_nodes)]


def generate_tree(depth: int, branching: int, seed: int = 0) -> TreeSpec:
    """Deterministic balanced tree; ``seed`` is accepted for API symmetry."""
    if depth < 1:
        raise ContractError(f"depth must be >= 1, got {depth}")
    if branching < 2:
        raise ContractError(f"branching must be >= 2, got {branching}")
    n = (branching ** (depth + 1) - 1) // (branching - 1)
    parents = tuple([-1] + [(k - 1) // branching for k in range(1, n)])
    return TreeSpec(depth=depth, branching=branching, parents=parents)


def graph_distances(tree: TreeSpec) -> np.ndarray:
    """Unweighted shortest-path distances, d(i,j) = depth_i + depth_j - 2 depth_lca."""
    n = tree.num_nodes
    depths = np.zeros(n, dtype=np.int64)
    for k in range(1, n):
        depths[k] = depths[tree.parents[k]] + 1
    dist = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            a, b = i, j
            while a != b:
                if depths[a] >= depths[b]:
                    a = tree.parents[a]
                else:
                    b = tree.parents[b]
            d = depths[i] + depths[j] - 2 * depths[a]
            dist[i, j] = dist[j, i] = d
    return dist
