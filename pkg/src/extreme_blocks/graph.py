"""Connected block graphs: construction, validation, and structural queries.

A block graph is a connected undirected graph in which every block
(maximal biconnected component) is a complete subgraph. Consequences used
throughout the library: any two maximal cliques share at most one node,
minimal separators between cliques are single nodes, and every pair of
nodes is joined by a unique shortest path.

Node identifiers are opaque strings. Internally they are mapped to dense
indices in sorted identifier order, which fixes matrix layouts across runs.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DisconnectedGraphError,
    NotBlockGraphError,
    UnknownCliqueError,
    UnknownNodeError,
)

Edge = tuple[str, str]


def canonical_edge(a: str, b: str) -> Edge:
    """Unordered pair in sorted order; the canonical key for edge maps."""
    return (a, b) if a <= b else (b, a)


class BlockGraph:
    """Validated connected block graph with precomputed structure.

    Attributes
    ----------
    nodes : tuple of str
        Node identifiers in sorted order; positions define dense indices.
    edges : frozenset of (str, str)
        Canonical (sorted) node pairs.
    cliques : tuple of frozenset
        Maximal cliques, sorted by their sorted node tuples.
    separators : frozenset of str
        Minimal clique-separator nodes (the cut vertices).

    Instances are immutable after construction and safe for concurrent
    read access.
    """

    def __init__(self, nodes: Iterable[str], edges: Iterable[Sequence[str]]):
        node_list = sorted({str(v) for v in nodes})
        if not node_list:
            raise UnknownNodeError("graph needs at least one node")
        self.nodes: tuple[str, ...] = tuple(node_list)
        self._index = {v: i for i, v in enumerate(self.nodes)}
        n = len(self.nodes)

        edge_set: set[Edge] = set()
        for pair in edges:
            a, b = str(pair[0]), str(pair[1])
            if a not in self._index or b not in self._index:
                raise UnknownNodeError(f"edge ({a}, {b}) references undeclared node")
            if a == b:
                raise NotBlockGraphError([a], f"self-loop at node {a}")
            edge_set.add(canonical_edge(a, b))
        self.edges: frozenset[Edge] = frozenset(edge_set)

        adj: list[list[int]] = [[] for _ in range(n)]
        for a, b in self.edges:
            ia, ib = self._index[a], self._index[b]
            adj[ia].append(ib)
            adj[ib].append(ia)
        self._adj = [sorted(neigh) for neigh in adj]
        self._adj_sets = [frozenset(neigh) for neigh in self._adj]

        self._check_connected()
        blocks = self._biconnected_components()
        self._validate_blocks(blocks)

        cliques = [frozenset(self.nodes[i] for i in blk) for blk in blocks]
        cliques.sort(key=lambda c: tuple(sorted(c)))
        self.cliques: tuple[frozenset, ...] = tuple(cliques)

        member_count = {v: 0 for v in self.nodes}
        self._cliques_of: dict[str, tuple[int, ...]] = {v: () for v in self.nodes}
        for ci, c in enumerate(self.cliques):
            for v in c:
                member_count[v] += 1
                self._cliques_of[v] = self._cliques_of[v] + (ci,)
        self.separators: frozenset[str] = frozenset(
            v for v, k in member_count.items() if k >= 2
        )

        # each edge lies in exactly one clique
        self._clique_of_edge: dict[Edge, int] = {}
        for ci, c in enumerate(self.cliques):
            members = sorted(c)
            for i, a in enumerate(members):
                for b in members[i + 1 :]:
                    self._clique_of_edge[(a, b)] = ci

        # eager path table: BFS parents and hop distances from every root
        self._parent = np.full((n, n), -1, dtype=np.int64)
        self._dist = np.full((n, n), -1, dtype=np.int64)
        for r in range(n):
            self._bfs(r)

    # -- construction internals ------------------------------------------

    def _check_connected(self):
        n = len(self.nodes)
        seen = [False] * n
        queue = deque([0])
        seen[0] = True
        count = 1
        while queue:
            v = queue.popleft()
            for w in self._adj[v]:
                if not seen[w]:
                    seen[w] = True
                    count += 1
                    queue.append(w)
        if count != n:
            missing = [self.nodes[i] for i, s in enumerate(seen) if not s]
            raise DisconnectedGraphError(
                f"graph is not connected; unreachable from {self.nodes[0]}: {missing[:5]}"
            )

    def _biconnected_components(self) -> list[set[int]]:
        """Hopcroft-Tarjan, iterative; returns node sets of the blocks."""
        n = len(self.nodes)
        disc = [-1] * n
        low = [0] * n
        comps: list[list[tuple[int, int]]] = []
        estack: list[tuple[int, int]] = []
        timer = 0
        for root in range(n):
            if disc[root] != -1:
                continue
            disc[root] = low[root] = timer
            timer += 1
            stack = [(root, -1, iter(self._adj[root]))]
            while stack:
                v, parent, it = stack[-1]
                pushed = False
                for w in it:
                    if w == parent:
                        continue
                    if disc[w] == -1:
                        estack.append((v, w))
                        disc[w] = low[w] = timer
                        timer += 1
                        stack.append((w, v, iter(self._adj[w])))
                        pushed = True
                        break
                    if disc[w] < disc[v]:
                        estack.append((v, w))
                        if disc[w] < low[v]:
                            low[v] = disc[w]
                if pushed:
                    continue
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    if low[v] < low[u]:
                        low[u] = low[v]
                    if low[v] >= disc[u]:
                        comp = []
                        while estack[-1] != (u, v):
                            comp.append(estack.pop())
                        comp.append(estack.pop())
                        comps.append(comp)
        out = []
        for comp in comps:
            nodes: set[int] = set()
            for a, b in comp:
                nodes.add(a)
                nodes.add(b)
            out.append(nodes)
        return out

    def _validate_blocks(self, blocks: list[set[int]]):
        for blk in blocks:
            k = len(blk)
            for a in blk:
                # within the block, every other member must be adjacent
                if len(self._adj_sets[a] & blk) != k - 1:
                    raise NotBlockGraphError([self.nodes[i] for i in blk])

    def _bfs(self, root: int):
        parent = self._parent[root]
        dist = self._dist[root]
        parent[root] = root
        dist[root] = 0
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in self._adj[v]:
                if dist[w] == -1:
                    dist[w] = dist[v] + 1
                    parent[w] = v
                    queue.append(w)

    # -- queries ----------------------------------------------------------

    def index(self, v: str) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise UnknownNodeError(f"unknown node {v!r}") from None

    def has_edge(self, a: str, b: str) -> bool:
        return canonical_edge(a, b) in self.edges

    def neighbors(self, v: str) -> tuple[str, ...]:
        return tuple(self.nodes[w] for w in self._adj[self.index(v)])

    def shortest_path(self, u: str, v: str) -> tuple[Edge, ...]:
        """Ordered edges of the unique shortest path from u to v.

        Empty when u == v.
        """
        iu, iv = self.index(u), self.index(v)
        parent = self._parent[iu]
        rev: list[Edge] = []
        w = iv
        while w != iu:
            p = int(parent[w])
            rev.append((self.nodes[p], self.nodes[w]))
            w = p
        rev.reverse()
        return tuple(rev)

    def path_nodes(self, u: str, v: str) -> tuple[str, ...]:
        """Node sequence of the unique shortest path, endpoints included."""
        path = self.shortest_path(u, v)
        return (u,) + tuple(b for _, b in path)

    def hop_distance(self, u: str, v: str) -> int:
        return int(self._dist[self.index(u), self.index(v)])

    def parent_toward(self, u: str, v: str) -> str:
        """The node just before v on the shortest path from u; u if v == u."""
        iu, iv = self.index(u), self.index(v)
        return self.nodes[int(self._parent[iu, iv])]

    def clique_index(self, C: Iterable[str]) -> int:
        key = frozenset(str(v) for v in C)
        for ci, c in enumerate(self.cliques):
            if c == key:
                return ci
        raise UnknownCliqueError(f"{tuple(sorted(key))} is not a maximal clique")

    def clique_of_edge(self, a: str, b: str) -> int:
        return self._clique_of_edge[canonical_edge(a, b)]

    def separator_node(self, u: str, C: Iterable[str]) -> str:
        """u itself if u is in C, else the single node of C through which
        every path from u into C passes."""
        ci = self.clique_index(C)
        clique = self.cliques[ci]
        if u in clique:
            return u
        iu = self.index(u)
        dist = self._dist[iu]
        return min(clique, key=lambda c: int(dist[self._index[c]]))

    def cliques_at(self, v: str) -> tuple[int, ...]:
        """Indices of the maximal cliques containing v."""
        self.index(v)
        return self._cliques_of[v]

    def clique_degree(self, v: str) -> int:
        return len(self.cliques_at(v))

    def edges_sorted(self) -> tuple[Edge, ...]:
        return tuple(sorted(self.edges))

    def __repr__(self):
        return f"BlockGraph({len(self.nodes)} nodes, {len(self.edges)} edges, {len(self.cliques)} cliques)"


def build_block_graph(nodes: Iterable[str], edges: Iterable[Sequence[str]]) -> BlockGraph:
    """Validate and build a BlockGraph; see class docstring for guarantees."""
    return BlockGraph(nodes, edges)


def shortest_path(g: BlockGraph, u: str, v: str) -> tuple[Edge, ...]:
    return g.shortest_path(u, v)


def separator_node(g: BlockGraph, u: str, C: Iterable[str]) -> str:
    g.index(u)
    return g.separator_node(u, C)


def clique_degree(g: BlockGraph, v: str) -> int:
    return g.clique_degree(v)
