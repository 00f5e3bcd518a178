import numpy as np
import pytest

from congestcuts import oracle
from congestcuts.context import build_context
from congestcuts.cut_vertex import (
    blocks_of,
    boruvka_at,
    detect_cut_vertices,
    preproc_info,
    preprocess,
)
from congestcuts.engine import CongestEngine
from congestcuts.graphs import load_graph

from conftest import random_connected_graph


def detect(g, seed=1):
    ctx = build_context(g, seed)
    eng = CongestEngine(g)
    out, pre = detect_cut_vertices(ctx, eng)
    return ctx, eng, out, pre


def test_p3_middle_vertex(zoo):
    _, _, out, _ = detect(zoo["p3"])
    assert out.cut_vertices == {1}


def test_c4_two_connected(zoo):
    _, _, out, _ = detect(zoo["c4"])
    assert out.cut_vertices == set()


def test_barbell_bridge_path():
    k4a = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    k4b = [(4, 5), (4, 6), (4, 7), (5, 6), (5, 7), (6, 7)]
    bridge = [(3, 8), (8, 9), (9, 4)]
    g = load_graph(k4a + k4b + bridge)
    _, _, out, _ = detect(g)
    assert out.cut_vertices == oracle.all_cut_vertices(g) == {3, 8, 9, 4}


def test_subtree_sketch_identities(zoo):
    g = zoo["k3"]
    ctx = build_context(g, 5)
    eng = CongestEngine(g)
    pre = preprocess(ctx, eng)
    # root subtree sketch equals sketch of V, the all-zeros string
    assert pre.full_sketch(range(g.n)).is_zero()
    root_rows = pre.subtree_rows(0)[ctx.s]
    assert not root_rows.any()
    # a leaf's subtree sketch is its own sketch
    t = ctx.t
    leaves = [v for v in range(g.n) if not t.children[v]]
    for v in leaves:
        assert np.array_equal(pre.subtree_rows(0)[v], pre.vertex_rows(0)[v])


def test_random_corpus_matches_oracle(corpus32):
    for i, g in enumerate(corpus32):
        _, _, out, _ = detect(g, seed=100 + i)
        assert out.cut_vertices == oracle.all_cut_vertices(g), g.edges


def test_spanning_forest_property(corpus16):
    for i, g in enumerate(corpus16):
        ctx, _, out, _ = detect(g, seed=200 + i)
        for x in range(g.n):
            if x in out.cut_vertices:
                continue
            # (T minus x) union E~(x) spans V minus x and is acyclic
            tree_edges = [(v, ctx.t.parent[v]) for v in range(g.n)
                          if ctx.t.parent[v] is not None and x not in (v, ctx.t.parent[v])]
            extra = out.spanning_edges[x]
            alive = g.n - 1
            assert len(tree_edges) + len(extra) == alive - 1
            from congestcuts.graphs import load_graph as lg
            relabel = {v: i for i, v in enumerate(sorted(set(range(g.n)) - {x}))}
            edges = [(relabel[a], relabel[b]) for (a, b) in tree_edges + list(extra)]
            sub = lg(edges, n=alive)   # raises if disconnected
            assert sub.m == alive - 1


def test_boruvka_partition_matches_components(corpus16):
    for i, g in enumerate(corpus16):
        ctx = build_context(g, 300 + i)
        eng = CongestEngine(g)
        pre = preprocess(ctx, eng)
        for x in range(g.n):
            res = boruvka_at(pre, x)
            blocks, _ = blocks_of(ctx, x)
            got = []
            for part in res.parts:
                verts = set()
                for b in part:
                    verts.update(blocks[b])
                got.append(frozenset(verts))
            expect = {frozenset(c) for c in oracle.components_minus(g, {x})}
            assert set(got) == expect


def test_phase_contraction(corpus16):
    drops = []
    for i, g in enumerate(corpus16):
        ctx = build_context(g, 400 + i)
        eng = CongestEngine(g)
        pre = preprocess(ctx, eng)
        for x in range(g.n):
            res = boruvka_at(pre, x)
            h = res.growable_history
            for a, b in zip(h, h[1:]):
                drops.append((a, b))
    if drops:
        mean_ratio = sum(b / a for a, b in drops) / len(drops)
        assert mean_ratio <= 0.75


def test_preproc_info_fields(zoo):
    g = zoo["c4"]
    ctx = build_context(g, 7)
    eng = CongestEngine(g)
    out, pre = detect_cut_vertices(ctx, eng)
    info = preproc_info(pre, out, 1)
    assert info.subtree_size == ctx.hl.subtree_size[1]
    assert info.sketch_all.is_zero()
    assert set(info.child_sizes) == set(ctx.t.children[1])
    assert len(info.eids) == g.degree(1)


def test_rounds_and_congestion_accounted(zoo):
    g = zoo["c4"]
    ctx = build_context(g, 8)
    eng = CongestEngine(g)
    detect_cut_vertices(ctx, eng)
    rep = eng.report()
    assert rep.per_algo["cutv:preproc"].dilation > 0
    assert rep.per_algo["cutv:preproc"].congestion > 0
    assert rep.per_algo["cutv:detect"].dilation == ctx.t.height()
