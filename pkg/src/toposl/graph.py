"""Undirected, unit-weight graphs and their hop-count metric."""

from __future__ import annotations

from collections import deque
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DisconnectedGraph


class Graph:
    """Immutable simple undirected graph on vertices ``0..n-1``.

    Edges are stored once as sorted pairs ``(i, j)`` with ``i < j``; the
    order of :attr:`edges` is lexicographic and is the order used for edge
    flow arrays throughout the package.
    """

    def __init__(self, n: int, edges=()):
        n = int(n)
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        seen = set()
        for e in edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for {n} vertices")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        self._n = n
        self._edges = tuple(sorted(seen))
        self._index = {e: k for k, e in enumerate(self._edges)}

    @property
    def n(self) -> int:
        return self._n

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return self._edges

    def edge_index(self, i: int, j: int) -> int:
        """Position of the unordered edge ``{i, j}`` in :attr:`edges`."""
        return self._index[(min(i, j), max(i, j))]

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self._index

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self._n)]
        for i, j in self._edges:
            adj[i].append(j)
            adj[j].append(i)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.neighbors], dtype=int)

    @cached_property
    def incidence(self) -> np.ndarray:
        """Signed ``n x |E|`` matrix; column ``k`` is ``+1`` at ``i`` and ``-1`` at ``j``.

        For edge flows ``f`` stored as ``f_ij`` with ``i < j`` the net inflow
        into every vertex is ``incidence @ f``.
        """
        B = np.zeros((self._n, len(self._edges)))
        for k, (i, j) in enumerate(self._edges):
            B[i, k] = 1.0
            B[j, k] = -1.0
        return B

    def components(self) -> list[list[int]]:
        return [list(c) for c in self._components]

    @cached_property
    def _components(self) -> tuple[tuple[int, ...], ...]:
        label = [-1] * self._n
        comps = []
        for s in range(self._n):
            if label[s] >= 0:
                continue
            label[s] = len(comps)
            comp = [s]
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for v in self.neighbors[u]:
                    if label[v] < 0:
                        label[v] = label[s]
                        comp.append(v)
                        queue.append(v)
            comps.append(tuple(sorted(comp)))
        return tuple(comps)

    def is_connected(self) -> bool:
        return len(self._components) == 1

    def without_edge(self, i: int, j: int) -> "Graph":
        key = (min(i, j), max(i, j))
        return Graph(self._n, [e for e in self._edges if e != key])

    def __eq__(self, other):
        return isinstance(other, Graph) and self._n == other._n and self._edges == other._edges

    def __hash__(self):
        return hash((self._n, self._edges))

    def __repr__(self):
        return f"Graph(n={self._n}, edges={len(self._edges)})"

    # ---- I/O (1-based on disk) ----

    @classmethod
    def from_text(cls, text: str) -> "Graph":
        lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines:
            raise ValueError("empty graph file")
        head = lines[0].split()
        if len(head) != 2:
            raise ValueError("first line must be 'N M'")
        n, m = int(head[0]), int(head[1])
        body = lines[1:]
        if len(body) != m:
            raise ValueError(f"header declares {m} edges, found {len(body)}")
        edges = []
        for ln in body:
            parts = ln.split()
            if len(parts) != 2:
                raise ValueError(f"bad edge line: {ln!r}")
            edges.append((int(parts[0]) - 1, int(parts[1]) - 1))
        return cls(n, edges)

    @classmethod
    def read(cls, path) -> "Graph":
        return cls.from_text(Path(path).read_text())

    def to_text(self) -> str:
        out = [f"{self._n} {len(self._edges)}"]
        out += [f"{i + 1} {j + 1}" for i, j in self._edges]
        return "\n".join(out) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())


def shortest_path_matrix(g: Graph, allow_disconnected: bool = False) -> np.ndarray:
    """All-pairs hop distances by breadth-first search from every vertex.

    Unreachable pairs raise :class:`DisconnectedGraph` unless
    ``allow_disconnected`` is set, in which case they are ``-1``.
    """
    n = g.n
    d = np.full((n, n), -1, dtype=int)
    for s in range(n):
        d[s, s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in g.neighbors[u]:
                if d[s, v] < 0:
                    d[s, v] = d[s, u] + 1
                    queue.append(v)
    if not allow_disconnected and (d < 0).any():
        raise DisconnectedGraph(f"graph with {n} vertices has {len(g.components())} components")
    return d


def max_degree(g: Graph) -> int:
    return int(g.degrees.max()) if g.n else 0


def diameter(g: Graph) -> int:
    return int(shortest_path_matrix(g).max())


# ---- constructors ----

def chain(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def star(n: int) -> Graph:
    return Graph(n, [(0, i) for i in range(1, n)])


def complete(n: int) -> Graph:
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def random_tree(n: int, rng: np.random.Generator) -> Graph:
    return Graph(n, [(int(rng.integers(0, i)), i) for i in range(1, n)])


def random_connected(n: int, rng: np.random.Generator, p_extra: float = 0.3) -> Graph:
    """Random spanning tree plus each remaining pair with probability ``p_extra``."""
    perm = rng.permutation(n)
    edges = {tuple(sorted((int(perm[int(rng.integers(0, i))]), int(perm[i])))) for i in range(1, n)}
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in edges and rng.random() < p_extra:
                edges.add((i, j))
    return Graph(n, edges)
