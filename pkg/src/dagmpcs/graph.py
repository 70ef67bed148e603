"""Causal order over the vertices and edges of a directed acyclic graph.

Vertices are opaque strings and edges are ``(source, target)`` tuples; an
*item* is either of the two.  Precedence between vertices is reachability.
It is extended to edges by comparing endpoints: ``(v, w) < (v', w')`` iff
``w <= v'``, ``v < (v', w')`` iff ``v <= v'`` and ``(v, w) < v'`` iff
``w <= v'``.  Note the mixed cases are not strict: ``v < (v, w)`` holds.
"""

from __future__ import annotations

from collections.abc import Iterable
from typing import Union

Vertex = str
Edge = tuple[str, str]
Item = Union[str, tuple[str, str]]


class GraphError(ValueError):
    pass


def is_edge(x: Item) -> bool:
    return isinstance(x, tuple)


def item_key(x: Item) -> tuple[str, ...]:
    """Sort key giving a total order on mixed vertex/edge collections.

    A vertex sorts right before its own outgoing edges.
    """
    return (x,) if isinstance(x, str) else x


def sorted_items(items: Iterable[Item]) -> list[Item]:
    return sorted(items, key=item_key)


def format_item(x: Item) -> str:
    return x if isinstance(x, str) else f"{x[0]}->{x[1]}"


def parse_item(text: str) -> Item:
    if "->" in text:
        src, dst = text.split("->", 1)
        return (src, dst)
    return text


class Dag:
    """Immutable DAG with a precomputed transitive closure (bit rows)."""

    def __init__(self, vertices: Iterable[Vertex], edges: Iterable[Edge]):
        self.vertices: tuple[Vertex, ...] = tuple(sorted(set(vertices)))
        self._index = {v: i for i, v in enumerate(self.vertices)}
        edge_set = {tuple(e) for e in edges}
        for a, b in edge_set:
            if a not in self._index or b not in self._index:
                raise GraphError(f"edge {a}->{b} has an endpoint outside the vertex set")
            if a == b:
                raise GraphError(f"self-loop on {a}")
        self.edges: tuple[Edge, ...] = tuple(sorted(edge_set))
        self._edge_set = frozenset(edge_set)
        self._succ: dict[Vertex, list[Vertex]] = {v: [] for v in self.vertices}
        self._pred: dict[Vertex, list[Vertex]] = {v: [] for v in self.vertices}
        for a, b in self.edges:
            self._succ[a].append(b)
            self._pred[b].append(a)
        self._topo = self._toposort()
        n = len(self.vertices)
        desc = [0] * n
        for v in reversed(self._topo):
            bits = 0
            for w in self._succ[v]:
                j = self._index[w]
                bits |= desc[j] | (1 << j)
            desc[self._index[v]] = bits
        anc = [0] * n
        for i in range(n):
            bits = desc[i]
            while bits:
                low = bits & -bits
                anc[low.bit_length() - 1] |= 1 << i
                bits ^= low
        self._desc = desc
        self._anc = anc

    def _toposort(self) -> tuple[Vertex, ...]:
        indeg = {v: len(self._pred[v]) for v in self.vertices}
        ready = sorted(v for v, d in indeg.items() if d == 0)
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for w in self._succ[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    ready.append(w)
            ready.sort()
        if len(order) != len(self.vertices):
            stuck = sorted(v for v, d in indeg.items() if d > 0)
            raise GraphError(f"graph has a directed cycle through {', '.join(stuck)}")
        return tuple(order)

    def __repr__(self) -> str:
        return f"Dag({len(self.vertices)} vertices, {len(self.edges)} edges)"

    def __contains__(self, x: Item) -> bool:
        if isinstance(x, tuple):
            return x in self._edge_set
        return x in self._index

    def topological_order(self) -> tuple[Vertex, ...]:
        return self._topo

    def has_edge(self, a: Vertex, b: Vertex) -> bool:
        return (a, b) in self._edge_set

    def successors(self, v: Vertex) -> list[Vertex]:
        return self._succ[v]

    def predecessors(self, v: Vertex) -> list[Vertex]:
        return self._pred[v]

    def in_edges(self, v: Vertex) -> list[Edge]:
        return [(u, v) for u in self._pred[v]]

    def out_edges(self, v: Vertex) -> list[Edge]:
        return [(v, w) for w in self._succ[v]]

    def _idx(self, v: Vertex) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise GraphError(f"unknown vertex {v!r}") from None

    def reaches(self, v: Vertex, w: Vertex) -> bool:
        """``v <= w``: equal, or a directed path leads from v to w."""
        i, j = self._idx(v), self._idx(w)
        return i == j or bool(self._desc[i] >> j & 1)

    def strictly_reaches(self, v: Vertex, w: Vertex) -> bool:
        return bool(self._desc[self._idx(v)] >> self._idx(w) & 1)

    def _unpack(self, bits: int) -> frozenset[Vertex]:
        out = []
        while bits:
            low = bits & -bits
            out.append(self.vertices[low.bit_length() - 1])
            bits ^= low
        return frozenset(out)

    def descendants(self, v: Vertex) -> frozenset[Vertex]:
        return self._unpack(self._desc[self._idx(v)])

    def ancestors(self, v: Vertex) -> frozenset[Vertex]:
        return self._unpack(self._anc[self._idx(v)])

    def precedes(self, x: Item, y: Item) -> bool:
        self._check(x)
        self._check(y)
        if isinstance(x, str):
            if isinstance(y, str):
                return self.strictly_reaches(x, y)
            return self.reaches(x, y[0])
        if isinstance(y, str):
            return self.reaches(x[1], y)
        return self.reaches(x[1], y[0])

    def _check(self, x: Item) -> None:
        if x not in self:
            raise GraphError(f"unknown item {format_item(x)!r}")


def causally_precedes(g: Dag, x: Item, y: Item) -> bool:
    return g.precedes(x, y)


def _down(g: Dag, v: Vertex) -> set[Item]:
    """Items strictly preceding vertex v."""
    below = g.ancestors(v)
    out: set[Item] = set(below)
    for u in below | {v}:
        out.update(g.in_edges(u))
    return out


def causal_closure(g: Dag, items: Iterable[Item]) -> frozenset[Item]:
    """Smallest causally closed superset of ``items``."""
    out: set[Item] = set()
    for x in items:
        g._check(x)
        out.add(x)
        if isinstance(x, str):
            out |= _down(g, x)
        else:
            out.add(x[0])
            out |= _down(g, x[0])
    return frozenset(out)


def is_causally_closed(g: Dag, items: Iterable[Item]) -> bool:
    items = frozenset(items)
    return causal_closure(g, items) == items


def minset(g: Dag, s: Iterable[Vertex]) -> frozenset[Vertex]:
    s = frozenset(s)
    return frozenset(v for v in s if not any(g.strictly_reaches(w, v) for w in s))


def maxset(g: Dag, s: Iterable[Vertex]) -> frozenset[Vertex]:
    s = frozenset(s)
    return frozenset(v for v in s if not any(g.strictly_reaches(v, w) for w in s))


def paths(g: Dag, sources: Iterable[Vertex], target: Vertex) -> list[tuple[Vertex, ...]]:
    """All directed paths from a source to ``target``, sorted lexicographically.

    The count can be exponential in the graph size.
    """
    g._idx(target)
    found: list[tuple[Vertex, ...]] = []

    def walk(prefix: list[Vertex]) -> None:
        v = prefix[-1]
        if v == target:
            found.append(tuple(prefix))
            return
        for w in g.successors(v):
            if g.reaches(w, target):
                prefix.append(w)
                walk(prefix)
                prefix.pop()

    for s in sorted(set(sources)):
        if g.reaches(s, target):
            walk([s])
    return sorted(found)
