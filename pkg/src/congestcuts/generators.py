"""Graph families for experiments.

Families are chosen to probe the claims under test: star-of-paths pins the
diameter while sweeping the maximum degree, path-of-cliques pins the degree
while sweeping the diameter, and biconnected-random feeds the pair pipeline
(which requires no single cut vertices).
"""

from __future__ import annotations

import random

from . import oracle
from .errors import InvalidParams
from .graphs import Graph, load_graph


def cycle(n: int) -> Graph:
    if n < 3:
        raise InvalidParams("cycle needs n >= 3")
    return load_graph([(i, (i + 1) % n) for i in range(n)])


def ladder(k: int) -> Graph:
    """Ladder with k rungs: 2k vertices, biconnected for k >= 2."""
    if k < 2:
        raise InvalidParams("ladder needs k >= 2")
    edges = []
    for i in range(k):
        edges.append((2 * i, 2 * i + 1))
        if i + 1 < k:
            edges.append((2 * i, 2 * i + 2))
            edges.append((2 * i + 1, 2 * i + 3))
    return load_graph(edges)


def random_connected(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi plus a random spanning tree to guarantee connectivity."""
    if n < 2 or not (0 <= p <= 1):
        raise InvalidParams("random-connected needs n >= 2 and p in [0, 1]")
    rng = random.Random(seed)
    edges = set()
    verts = list(range(n))
    rng.shuffle(verts)
    for i in range(1, n):
        a, b = verts[rng.randrange(i)], verts[i]
        edges.add((min(a, b), max(a, b)))
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.add((u, v))
    return load_graph(sorted(edges), n=n)


def star_of_paths(delta: int, d: int) -> Graph:
    """A center with `delta` legs, each of length ceil(d / 2).

    Diameter is ~d independent of delta; the center's degree is delta.
    """
    if delta < 2 or d < 2:
        raise InvalidParams("star-of-paths needs delta >= 2 and d >= 2")
    leg = max(1, (d + 1) // 2)
    edges = []
    nxt = 1
    for _ in range(delta):
        prev = 0
        for _ in range(leg):
            edges.append((prev, nxt))
            prev = nxt
            nxt += 1
    return load_graph(edges)


def path_of_cliques(d: int, k: int) -> Graph:
    """d cliques of size k chained by vertex-disjoint edge pairs; diameter
    grows with d, maximum degree stays ~k."""
    if d < 2 or k < 3:
        raise InvalidParams("path-of-cliques needs d >= 2 and k >= 3")
    edges = []
    for c in range(d):
        base = c * k
        for i in range(k):
            for j in range(i + 1, k):
                edges.append((base + i, base + j))
        if c + 1 < d:
            edges.append((base + k - 2, base + k))
            edges.append((base + k - 1, base + k + 1))
    return load_graph(edges)


def biconnected_random(n: int, seed: int, p: float = 0.15) -> Graph:
    """Random connected graph patched with ear edges until 2-connected."""
    if n < 3:
        raise InvalidParams("biconnected-random needs n >= 3")
    rng = random.Random(seed)
    g = random_connected(n, p, seed)
    for _ in range(10 * n):
        cuts = oracle.all_cut_vertices(g)
        if not cuts:
            return g
        x = sorted(cuts)[rng.randrange(len(cuts))]
        comps = oracle.components_minus(g, {x})
        a = rng.choice(comps[0])
        b = rng.choice(comps[1])
        if not g.has_edge(a, b) and a != b:
            g = load_graph(g.edges + [(min(a, b), max(a, b))], n=n)
    raise InvalidParams(f"could not biconnect n={n} seed={seed}")


FAMILIES = {
    "cycle": lambda ps: cycle(ps["n"]),
    "ladder": lambda ps: ladder(ps["n"] // 2),
    "random-connected": lambda ps: random_connected(ps["n"], ps.get("p", 0.2), ps["seed"]),
    "star-of-paths": lambda ps: star_of_paths(ps["delta"], ps["d"]),
    "path-of-cliques": lambda ps: path_of_cliques(ps["d"], ps.get("k", 6)),
    "biconnected-random": lambda ps: biconnected_random(ps["n"], ps["seed"], ps.get("p", 0.15)),
}


def generate(family: str, params: dict) -> Graph:
    if family not in FAMILIES:
        raise InvalidParams(f"unknown family {family!r}; know {sorted(FAMILIES)}")
    try:
        return FAMILIES[family](params)
    except KeyError as exc:
        raise InvalidParams(f"family {family!r} missing parameter {exc}") from exc
