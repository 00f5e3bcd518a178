"""Undirected simple graphs over dense integer vertex ids.

The Graph object is immutable after construction and safe to share between
concurrently running vertex programs.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from typing import Iterable, Sequence

from .errors import Disconnected, DuplicateEdge, GraphFormatError, SelfLoop


class Graph:
    """Simple connected-by-default undirected graph.

    Vertices are 0..n-1.  `adj[v]` is the sorted neighbor list of v and
    `edges` is the sorted list of canonical (u, v) pairs with u < v.
    """

    __slots__ = ("n", "adj", "edges", "_edge_set")

    def __init__(self, n: int, adj: list[list[int]], edges: list[tuple[int, int]]):
        self.n = n
        self.adj = adj
        self.edges = edges
        self._edge_set = frozenset(edges)

    @property
    def m(self) -> int:
        return len(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return False
        if u > v:
            u, v = v, u
        return (u, v) in self._edge_set

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def max_degree(self) -> int:
        return max((len(a) for a in self.adj), default=0)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(str(self.n).encode())
        for u, v in self.edges:
            h.update(f",{u}-{v}".encode())
        return h.hexdigest()[:16]

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def load_graph(edge_list: Iterable[Sequence[int]], n: int | None = None,
               allow_disconnected: bool = False) -> Graph:
    """Build a canonical Graph from (u, v) pairs.

    Rejects self loops, duplicate edges and out-of-range ids.  Disconnected
    input is rejected unless `allow_disconnected` is set (oracle-only use).
    """
    pairs = []
    max_id = -1
    for e in edge_list:
        u, v = int(e[0]), int(e[1])
        if u == v:
            raise SelfLoop(f"self loop at vertex {u}")
        if u < 0 or v < 0:
            raise GraphFormatError(f"negative vertex id in edge ({u}, {v})")
        if u > v:
            u, v = v, u
        pairs.append((u, v))
        max_id = max(max_id, v)
    if n is None:
        n = max_id + 1
    elif max_id >= n:
        raise GraphFormatError(f"vertex id {max_id} out of range for n={n}")
    if n <= 0:
        raise GraphFormatError("empty graph")

    seen = set()
    for p in pairs:
        if p in seen:
            raise DuplicateEdge(f"duplicate edge {p}")
        seen.add(p)

    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in pairs:
        adj[u].append(v)
        adj[v].append(u)
    for a in adj:
        a.sort()
    g = Graph(n, adj, sorted(pairs))
    if not allow_disconnected and not is_connected(g):
        raise Disconnected("input graph is not connected")
    return g


def is_connected(g: Graph, removed: frozenset[int] | set[int] = frozenset()) -> bool:
    alive = [v for v in range(g.n) if v not in removed]
    if not alive:
        return True
    seen = {alive[0]}
    q = deque(seen)
    while q:
        u = q.popleft()
        for w in g.adj[u]:
            if w not in removed and w not in seen:
                seen.add(w)
                q.append(w)
    return len(seen) == len(alive)


def parse_edge_list(text: str) -> Graph:
    """Parse the plain text format: one `u v` pair per line, `#` comments."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'u v', got {raw!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise GraphFormatError(f"line {lineno}: non-integer id") from exc
    return load_graph(pairs)


def parse_json_graph(text: str) -> Graph:
    """Parse the JSON interchange format: {"n": int, "edges": [[u, v], ...]}."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"bad JSON: {exc}") from exc
    if not isinstance(obj, dict) or "edges" not in obj:
        raise GraphFormatError("JSON graph must be an object with an 'edges' field")
    return load_graph(obj["edges"], n=obj.get("n"))


def read_graph_file(path: str) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return parse_json_graph(text)
    return parse_edge_list(text)


def graph_to_json(g: Graph) -> str:
    return json.dumps({"n": g.n, "edges": [list(e) for e in g.edges]})
