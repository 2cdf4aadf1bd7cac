"""Undirected communication graphs for the coordination layer.

Nodes are numbered 1..N in user-facing inputs (scenario files, CLI) and
0..N-1 internally. Edges are ordered pairs (tail, head); the orientation
fixes the sign of the relative coordinate z_k = x_tail - x_head and of
the incidence matrix, nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Graph",
    "TreeCheck",
    "DEMO_TREE_EDGES",
]

# 8-node spanning tree used by the bundled demo scenario (1-based pairs).
DEMO_TREE_EDGES: tuple[tuple[int, int], ...] = (
    (1, 2),
    (2, 3),
    (3, 4),
    (3, 5),
    (4, 6),
    (5, 7),
    (6, 8),
)


@dataclass(frozen=True)
class TreeCheck:
    """Diagnostics from a spanning-tree check."""

    is_tree: bool
    connected: bool
    n_components: int
    has_cycle: bool
    message: str


@dataclass(frozen=True)
class Graph:
    """Undirected graph with oriented edges, stored 0-based.

    Parameters
    ----------
    n_nodes : int
        Number of nodes, at least 1.
    edges : tuple of (int, int)
        Oriented edges (tail, head), 0-based, no self loops, no
        duplicates in either orientation.
    """

    n_nodes: int
    edges: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.n_nodes < 1:
            raise ValueError(f"graph needs at least one node, got {self.n_nodes}")
        seen: set[frozenset[int]] = set()
        for tail, head in self.edges:
            if not (0 <= tail < self.n_nodes and 0 <= head < self.n_nodes):
                raise ValueError(f"edge ({tail}, {head}) out of range for {self.n_nodes} nodes")
            if tail == head:
                raise ValueError(f"self loop at node {tail}")
            key = frozenset((tail, head))
            if key in seen:
                raise ValueError(f"duplicate edge ({tail}, {head})")
            seen.add(key)

    @classmethod
    def from_one_based(cls, n_nodes: int, edges) -> "Graph":
        """Build from 1-based (tail, head) pairs as written in scenario files."""
        shifted = tuple((int(i) - 1, int(j) - 1) for i, j in edges)
        return cls(n_nodes=n_nodes, edges=shifted)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, node: int) -> tuple[int, ...]:
        """Sorted 0-based neighbors of ``node``."""
        if not 0 <= node < self.n_nodes:
            raise ValueError(f"node {node} out of range")
        out = set()
        for tail, head in self.edges:
            if tail == node:
                out.add(head)
            elif head == node:
                out.add(tail)
        return tuple(sorted(out))

    def incidence_matrix(self) -> np.ndarray:
        """Oriented incidence matrix B, shape (n_nodes, n_edges), int64.

        Column k carries +1 at the tail and -1 at the head of edge k, so
        the stacked relative coordinate is z = B.T @ x.
        """
        b = np.zeros((self.n_nodes, self.n_edges), dtype=np.int64)
        for k, (tail, head) in enumerate(self.edges):
            b[tail, k] = 1
            b[head, k] = -1
        return b

    def laplacian(self) -> np.ndarray:
        """Graph Laplacian L = B @ B.T, shape (n_nodes, n_nodes), int64."""
        b = self.incidence_matrix()
        return b @ b.T

    def edge_laplacian(self) -> np.ndarray:
        """Edge Laplacian B.T @ B, shape (n_edges, n_edges), int64."""
        b = self.incidence_matrix()
        return b.T @ b

    def check_spanning_tree(self) -> TreeCheck:
        """Check connectivity and acyclicity by breadth-first search."""
        n = self.n_nodes
        adj: list[list[int]] = [[] for _ in range(n)]
        for tail, head in self.edges:
            adj[tail].append(head)
            adj[head].append(tail)
        visited = [False] * n
        n_components = 0
        for start in range(n):
            if visited[start]:
                continue
            n_components += 1
            visited[start] = True
            queue = [start]
            while queue:
                node = queue.pop()
                for nbr in adj[node]:
                    if not visited[nbr]:
                        visited[nbr] = True
                        queue.append(nbr)
        connected = n_components == 1
        # For a graph with c components and no cycles, M = N - c exactly.
        has_cycle = self.n_edges > n - n_components
        is_tree = connected and not has_cycle
        if is_tree:
            message = "spanning tree"
        elif not connected:
            message = f"graph is disconnected ({n_components} components)"
        else:
            message = "graph contains a cycle"
        return TreeCheck(
            is_tree=is_tree,
            connected=connected,
            n_components=n_components,
            has_cycle=has_cycle,
            message=message,
        )
