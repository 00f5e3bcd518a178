"""Centralized ground truth: exhaustive cut detection and path utilities.

Everything here is deliberately brute force and independent of the sketch
machinery; it is the reference the distributed pipeline is validated against.
A DFS-lowpoint articulation-point routine is kept as a second witness.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .graphs import Graph


def components_minus(g: Graph, removed: set[int] | frozenset[int]) -> list[list[int]]:
    """Connected components of G minus a vertex set, by plain BFS."""
    removed = set(removed)
    label = {}
    comps: list[list[int]] = []
    for start in range(g.n):
        if start in removed or start in label:
            continue
        comp = [start]
        label[start] = len(comps)
        q = deque([start])
        while q:
            u = q.popleft()
            for w in g.adj[u]:
                if w in removed or w in label:
                    continue
                label[w] = len(comps)
                comp.append(w)
                q.append(w)
        comps.append(comp)
    return comps


def connected_minus(g: Graph, removed) -> tuple[bool, list[list[int]]]:
    """Is G minus `removed` connected?  Also returns the component labeling.

    The empty and single-vertex leftovers count as connected.
    """
    comps = components_minus(g, set(removed))
    return len(comps) <= 1, comps


def all_cut_vertices(g: Graph) -> set[int]:
    out = set()
    for x in range(g.n):
        ok, _ = connected_minus(g, {x})
        if not ok:
            out.add(x)
    return out


def all_cut_pairs(g: Graph) -> set[tuple[int, int]]:
    """All unordered pairs {x, y} with G minus {x, y} disconnected.

    Exhaustive over C(n, 2) pairs; fine at desk scale (n <= 64).
    """
    out = set()
    for x in range(g.n):
        for y in range(x + 1, g.n):
            ok, _ = connected_minus(g, {x, y})
            if not ok:
                out.add((x, y))
    return out


def articulation_points_dfs(g: Graph) -> set[int]:
    """Lowpoint articulation points; second independent witness."""
    disc = [-1] * g.n
    low = [0] * g.n
    out: set[int] = set()
    timer = 0
    for root in range(g.n):
        if disc[root] != -1:
            continue
        # iterative DFS so deep graphs do not hit the recursion limit
        stack = [(root, -1, iter(g.adj[root]))]
        disc[root] = low[root] = timer
        timer += 1
        root_children = 0
        while stack:
            u, parent, it = stack[-1]
            advanced = False
            for w in it:
                if disc[w] == -1:
                    disc[w] = low[w] = timer
                    timer += 1
                    if u == root:
                        root_children += 1
                    stack.append((w, u, iter(g.adj[w])))
                    advanced = True
                    break
                elif w != parent:
                    low[u] = min(low[u], disc[w])
            if not advanced:
                stack.pop()
                if stack:
                    p = stack[-1][0]
                    low[p] = min(low[p], low[u])
                    if p != root and low[u] >= disc[p]:
                        out.add(p)
        if root_children > 1:
            out.add(root)
    return out


@dataclass
class OracleVerdict:
    cut_vertices: set[int] = field(default_factory=set)
    cut_pairs: set[tuple[int, int]] = field(default_factory=set)


def full_verdict(g: Graph) -> OracleVerdict:
    return OracleVerdict(all_cut_vertices(g), all_cut_pairs(g))


# ---------------------------------------------------------------------------
# Naive tree/path helpers used by derived-value tests.

def tree_path(parent: list[int | None], v: int) -> list[int]:
    """Root-to-v vertex list in a rooted tree given parent pointers."""
    path = [v]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])  # type: ignore[arg-type]
    path.reverse()
    return path


def naive_lca(parent: list[int | None], u: int, v: int) -> int:
    pu = tree_path(parent, u)
    pv = tree_path(parent, v)
    lca = pu[0]
    for a, b in zip(pu, pv):
        if a != b:
            break
        lca = a
    return lca
