"""Rooted BFS trees, heavy-light decomposition and ancestry labels.

These are the centralized twins of the distributed primitives; the simulator
cross-checks its vertex programs against them.  A compressed path lists the
light vertices of a root path together with the lengths of the heavy runs
between them, giving an O(log^2 n)-bit ancestry label.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .graphs import Graph


class BfsTree:
    """BFS tree rooted at `root`; children ordered by vertex id."""

    __slots__ = ("g", "root", "parent", "depth", "children", "order")

    def __init__(self, g: Graph, root: int, parent, depth, children, order):
        self.g = g
        self.root = root
        self.parent = parent          # parent[v] is None for the root
        self.depth = depth
        self.children = children
        self.order = order            # vertices in BFS (top-down) order

    @property
    def n(self) -> int:
        return self.g.n

    def height(self) -> int:
        return max(self.depth)

    def path_to_root(self, v: int) -> list[int]:
        """Vertex list of pi(s, v), from the root down to v."""
        path = [v]
        while self.parent[path[-1]] is not None:
            path.append(self.parent[path[-1]])
        path.reverse()
        return path

    def subtree(self, v: int) -> list[int]:
        out = [v]
        i = 0
        while i < len(out):
            out.extend(self.children[out[i]])
            i += 1
        return out

    def is_tree_edge(self, u: int, v: int) -> bool:
        return self.parent[u] == v or self.parent[v] == u


def bfs_tree(g: Graph, s: int) -> BfsTree:
    parent: list[int | None] = [None] * g.n
    depth = [-1] * g.n
    children: list[list[int]] = [[] for _ in range(g.n)]
    order = [s]
    depth[s] = 0
    q = deque([s])
    while q:
        u = q.popleft()
        for w in g.adj[u]:          # adjacency is sorted: deterministic
            if depth[w] == -1:
                depth[w] = depth[u] + 1
                parent[w] = u
                children[u].append(w)
                order.append(w)
                q.append(w)
    if len(order) != g.n:
        raise ValueError("bfs_tree requires a connected graph")
    return BfsTree(g, s, parent, depth, children, order)


@dataclass
class HeavyLight:
    heavy_child: list[int | None]
    is_heavy: list[bool]            # is v the heavy child of its parent
    subtree_size: list[int]

    def is_light(self, v: int) -> bool:
        return not self.is_heavy[v]


def heavy_light(t: BfsTree) -> HeavyLight:
    n = t.n
    size = [1] * n
    for v in reversed(t.order):
        p = t.parent[v]
        if p is not None:
            size[p] += size[v]
    heavy_child: list[int | None] = [None] * n
    is_heavy = [False] * n
    for v in range(n):
        best = None
        for c in t.children[v]:     # ties: children sorted by id, first wins
            if best is None or size[c] > size[best]:
                best = c
        heavy_child[v] = best
        if best is not None:
            is_heavy[best] = True
    return HeavyLight(heavy_child, is_heavy, size)


def light_depth(t: BfsTree, hl: HeavyLight, v: int) -> int:
    """Number of light edges on pi(s, v)."""
    count = 0
    while t.parent[v] is not None:
        if not hl.is_heavy[v]:
            count += 1
        v = t.parent[v]
    return count


@dataclass(frozen=True)
class CompressedPath:
    """Heavy-light compression of a downward tree path.

    `lights` lists the light vertices on the path in order; `gaps[i]` is the
    number of heavy vertices following lights[i] before the next light vertex
    (the final gap runs through the terminal).  `lead` counts heavy vertices
    before the first light vertex; it is always 0 for paths from the root of
    a tree whose root is light.
    """

    lights: tuple[int, ...]
    gaps: tuple[int, ...]
    terminal: int
    lead: int = 0

    @property
    def terminal_light(self) -> bool:
        return bool(self.lights) and self.lights[-1] == self.terminal

    def light_pairs(self) -> tuple[tuple[int, int], ...]:
        """(depth-on-path, vertex id) for each light vertex."""
        pairs = []
        d = self.lead
        for i, ell in enumerate(self.lights):
            pairs.append((d, ell))
            d += self.gaps[i] + 1
        return tuple(pairs)

    @property
    def path_depth(self) -> int:
        """0-based position of the terminal on the path."""
        if not self.lights:
            return self.lead - 1
        d = self.lead
        for gp in self.gaps[:-1]:
            d += gp + 1
        return d + self.gaps[-1]

    def num_vertices(self) -> int:
        return self.path_depth + 1


def compress_path(path: list[int], is_light) -> CompressedPath:
    """Compress an explicit vertex path given a per-vertex lightness test."""
    lights: list[int] = []
    gaps: list[int] = []
    lead = 0
    run = 0
    for v in path:
        if is_light(v):
            if lights:
                gaps.append(run)
            else:
                lead = run
            lights.append(v)
            run = 0
        else:
            run += 1
    if lights:
        gaps.append(run)
    else:
        lead = run
    return CompressedPath(tuple(lights), tuple(gaps), path[-1], lead)


def is_path_prefix(a: CompressedPath, b: CompressedPath) -> bool:
    """Is the path of `a` a prefix of the path of `b` (same coordinate root)?

    Sound because heavy runs are unique: a heavy vertex is determined by its
    nearest light ancestor (or the coordinate root) and its depth.
    """
    da, db = a.path_depth, b.path_depth
    if da > db:
        return False
    pa = a.light_pairs()
    pb = tuple(p for p in b.light_pairs() if p[0] <= da)
    return pa == pb


@dataclass(frozen=True)
class AncLabel:
    """Ancestry label of a vertex: compressed root path plus the tree tag."""

    cp: CompressedPath

    @property
    def terminal(self) -> int:
        return self.cp.terminal

    @property
    def depth(self) -> int:
        return self.cp.path_depth

    def light_vertices(self) -> tuple[int, ...]:
        return self.cp.lights

    def heavy_gaps(self) -> tuple[int, ...]:
        return self.cp.gaps


def anc_label(t: BfsTree, hl: HeavyLight, v: int) -> AncLabel:
    path = t.path_to_root(v)
    return AncLabel(compress_path(path, lambda u: not hl.is_heavy[u]))


def all_anc_labels(t: BfsTree, hl: HeavyLight) -> list[AncLabel]:
    return [anc_label(t, hl, v) for v in range(t.n)]


def is_ancestor(a: AncLabel, b: AncLabel) -> bool:
    """True iff a's vertex lies on pi(s, b's vertex); reflexive."""
    return is_path_prefix(a.cp, b.cp)


def edge_depth(t: BfsTree, e: tuple[int, int]) -> int:
    """Depth of the LCA of the endpoints of e."""
    u, v = e
    du, dv = t.depth[u], t.depth[v]
    while du > dv:
        u = t.parent[u]
        du -= 1
    while dv > du:
        v = t.parent[v]
        dv -= 1
    while u != v:
        u = t.parent[u]
        v = t.parent[v]
        du -= 1
    return du
