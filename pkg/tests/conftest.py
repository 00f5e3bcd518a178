"""Shared corpora and fixtures.

The random corpora are frozen by seed so every run of the suite sees the
same graphs.  Keep generation here cheap; heavyweight sweeps live in the
acceptance module.
"""

from __future__ import annotations

import random

import pytest

from congestcuts.graphs import Graph, load_graph


def random_connected_graph(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi plus a random spanning tree to force connectivity."""
    rng = random.Random(seed)
    edges = set()
    verts = list(range(n))
    rng.shuffle(verts)
    for i in range(1, n):
        a = verts[rng.randrange(i)]
        b = verts[i]
        edges.add((min(a, b), max(a, b)))
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.add((u, v))
    return load_graph(sorted(edges), n=n)


def small_corpus(max_n: int = 32, count: int = 30, seed: int = 2024) -> list[Graph]:
    rng = random.Random(seed)
    out = []
    for i in range(count):
        n = rng.randrange(4, max_n + 1)
        p = rng.choice([0.08, 0.15, 0.3, 0.5])
        out.append(random_connected_graph(n, p, seed * 1000 + i))
    return out


@pytest.fixture(scope="session")
def corpus32() -> list[Graph]:
    return small_corpus(max_n=32, count=30)


@pytest.fixture(scope="session")
def corpus16() -> list[Graph]:
    return small_corpus(max_n=16, count=20, seed=77)


def named_graphs() -> dict[str, Graph]:
    return {
        "p3": load_graph([(0, 1), (1, 2)]),
        "p4": load_graph([(0, 1), (1, 2), (2, 3)]),
        "k3": load_graph([(0, 1), (1, 2), (0, 2)]),
        "c4": load_graph([(0, 1), (1, 2), (2, 3), (0, 3)]),
        "c5": load_graph([(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]),
        "k4": load_graph([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
        "star": load_graph([(0, 1), (0, 2), (0, 3)]),
    }


@pytest.fixture(scope="session")
def zoo() -> dict[str, Graph]:
    return named_graphs()
