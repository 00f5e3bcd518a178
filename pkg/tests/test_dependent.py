import numpy as np
import pytest

from congestcuts import generators, oracle
from congestcuts.context import build_context
from congestcuts.cut_vertex import detect_cut_vertices
from congestcuts.dependent import (
    DependentOutcome,
    build_component_tree,
    detect_dependent_pairs,
    is_ancestor_tt,
    run_ay,
)
from congestcuts.engine import CongestEngine
from congestcuts.errors import NotSpanning
from congestcuts.graphs import load_graph
from congestcuts.tree import bfs_tree


def pipeline_to_dep(g, seed=1):
    ctx = build_context(g, seed)
    eng = CongestEngine(g)
    cutv, pre = detect_cut_vertices(ctx, eng)
    assert not cutv.cut_vertices, "dependent-stage tests need biconnected input"
    dep = detect_dependent_pairs(ctx, eng, pre, cutv.spanning_edges)
    return ctx, eng, cutv, dep


def dependent_oracle_pairs(ctx, g):
    out = set()
    for (a, b) in oracle.all_cut_pairs(g):
        if ctx.is_anc(a, b) or ctx.is_anc(b, a):
            out.add((a, b))
    return out


def centralized_ttilde(ctx, y, span_edges):
    """BFS of (T minus y) + E~(y), re-rooted at s (or at the minimum child
    for y = s); the reference for T~ parents and subtree membership."""
    from collections import deque
    g = ctx.g
    adj = {v: [] for v in range(g.n) if v != y}
    for v in range(g.n):
        p = ctx.t.parent[v]
        if p is not None and y not in (v, p):
            adj[v].append(p)
            adj[p].append(v)
    for (a, b) in span_edges:
        adj[a].append(b)
        adj[b].append(a)
    root = ctx.s if y != ctx.s else min(ctx.t.children[y])
    parent = {root: None}
    order = [root]
    q = deque([root])
    while q:
        u = q.popleft()
        for w in sorted(adj[u]):
            if w not in parent:
                parent[w] = u
                order.append(w)
                q.append(w)
    return parent, order


def test_component_tree_leaf(zoo):
    g = zoo["c4"]
    ctx = build_context(g, 3)
    eng = CongestEngine(g)
    cutv, _ = detect_cut_vertices(ctx, eng)
    leaf = next(v for v in range(g.n) if not ctx.t.children[v])
    ct = build_component_tree(ctx, leaf, cutv.spanning_edges[leaf])
    assert len(ct.comps) == 1 and ct.root_comp == 0
    assert not ct.bridge


def test_component_tree_chained_components():
    # y's two subtrees hang one below the other through outside edges,
    # mirroring the drawn component-tree configuration
    edges = [(0, 1), (1, 2), (1, 3),            # y = 1 with children 2, 3
             (2, 4), (3, 5),
             (0, 4),                            # C(2) attaches to C_0
             (4, 5)]                            # wait: 4 in T_2 subtree
    g = load_graph(edges + [(0, 6), (6, 3)], allow_disconnected=False)
    ctx = build_context(g, 11)
    eng = CongestEngine(g)
    cutv, _ = detect_cut_vertices(ctx, eng)
    if cutv.cut_vertices:
        pytest.skip("instance not biconnected under this seed")
    ct = build_component_tree(ctx, 1, cutv.spanning_edges[1])
    # C_0 is the root; every other component reaches it through bridges
    assert ct.root_comp == 0
    for c in ct.order[1:]:
        r, p = ct.bridge[c]
        assert ct.comp_of[r] == c
        assert ct.comp_of[p] == ct.parent_comp[c]


def test_component_tree_matches_contraction(corpus16):
    for i, g in enumerate(corpus16):
        ctx = build_context(g, 600 + i)
        eng = CongestEngine(g)
        cutv, _ = detect_cut_vertices(ctx, eng)
        if cutv.cut_vertices:
            continue
        for y in range(g.n):
            if not ctx.t.children[y]:
                continue
            ct = build_component_tree(ctx, y, cutv.spanning_edges[y])
            # contracting components of T minus y in the centralized T~
            # gives the same parent relation
            parent, _ = centralized_ttilde(ctx, y, cutv.spanning_edges[y])
            for c in ct.order[1:]:
                r, p = ct.bridge[c]
                assert parent[r] == p


def test_not_spanning_when_y_is_cut_vertex():
    g = load_graph([(0, 1), (1, 2), (2, 3)])    # P4: 1 and 2 are cut vertices
    ctx = build_context(g, 5)
    eng = CongestEngine(g)
    cutv, _ = detect_cut_vertices(ctx, eng)
    assert cutv.cut_vertices == {1, 2}
    with pytest.raises(NotSpanning):
        build_component_tree(ctx, 1, cutv.spanning_edges[1])


def test_ttilde_structure_and_labels(corpus16):
    checked = 0
    for i, g in enumerate(corpus16):
        ctx = build_context(g, 700 + i)
        eng = CongestEngine(g)
        cutv, pre = detect_cut_vertices(ctx, eng)
        if cutv.cut_vertices:
            continue
        dep = DependentOutcome(set())
        for y in range(g.n):
            run_ay(ctx, eng, pre, cutv.spanning_edges, y, dep)
        for y, td in dep.states.items():
            parent, order = centralized_ttilde(ctx, y, cutv.spanning_edges[y])
            # T~ parents agree with the centralized re-rooted BFS on members
            for v in td.members:
                assert td.parent[v] == parent[v], (g.edges, y, v)
                if td.parent[v] is None:
                    continue
                e = (v, td.parent[v])
                ok_tree = ctx.t.is_tree_edge(*e) and y not in e
                assert ok_tree or tuple(sorted(e)) in {tuple(sorted(x))
                                                       for x in cutv.spanning_edges[y]}
            # subtree sizes match the centralized count
            desc = {v: 1 for v in parent}
            for v in reversed(order):
                if parent[v] is not None:
                    desc[parent[v]] = desc.get(parent[v], 1) + desc[v]
            for v in td.members:
                assert td.size_td[v] == desc[v]
            # hybrid ancestry agrees with centralized T~ ancestry; C_0 labels
            # coincide with anc_T byte for byte
            anc_sets = {v: set() for v in parent}
            for v in parent:
                u = v
                while u is not None:
                    anc_sets[v].add(u)
                    u = parent[u]
            if y != ctx.s:
                for v in td.ct.comps[0]:
                    assert td.label[v].prefix == ctx.labels[v]
                    assert td.label[v].bridge is None
            verts = [v for v in range(g.n) if v != y]
            for u in verts:
                for v in verts:
                    assert is_ancestor_tt(td.label[u], td.label[v]) == (u in anc_sets[v]), \
                        (g.edges, y, u, v)
            checked += 1
    assert checked >= 5


def test_ttilde_sketches_match_recomputation(corpus16):
    from congestcuts.sketch import SketchSpace
    done = 0
    for i, g in enumerate(corpus16):
        if done >= 3:
            break
        ctx = build_context(g, 800 + i)
        eng = CongestEngine(g)
        cutv, pre = detect_cut_vertices(ctx, eng)
        if cutv.cut_vertices:
            continue
        dep = DependentOutcome(set())
        for y in range(min(g.n, 6)):
            run_ay(ctx, eng, pre, cutv.spanning_edges, y, dep)
        for y, td in dep.states.items():
            seeds_y = ctx.seeds.derive(f"dep:{y}")
            members = set(td.members)
            edges_y = [e for e in g.edges
                       if y not in e and (e[0] in members or e[1] in members)]
            space = SketchSpace(g.n, edges_y, seeds_y, ctx.cfg,
                                graph_tag=f"G-minus:{y}", tree_tag=f"T~:{y}")
            # recompute subtree sketches from scratch and compare to the
            # beta-style aggregation the stage uses
            from congestcuts.dependent import _td_subtree_rows_factory
            rows = _td_subtree_rows_factory(td, space)(0)
            parent, order = centralized_ttilde(ctx, y, cutv.spanning_edges[y])
            R = space.rows(0)
            for x in td.members:
                sub = [v for v in td.members if _td_is_anc(td, parent, x, v)]
                expect = np.zeros_like(R[x])
                for v in sub:
                    expect ^= R[v]
                assert np.array_equal(rows[x], expect)
        done += 1
    assert done >= 2


def _td_is_anc(td, parent, a, u):
    while u is not None:
        if u == a:
            return True
        u = parent[u]
    return False


def test_decide_examples_c4_c5(zoo):
    # C4: the opposite dependent pair is found
    ctx, _, _, dep = pipeline_to_dep(zoo["c4"])
    expect = dependent_oracle_pairs(ctx, zoo["c4"])
    assert dep.pairs == expect and expect        # (0, 2) under root 0
    # C5: dependent subset of its 5 cut pairs, exactly
    ctx, _, _, dep = pipeline_to_dep(zoo["c5"])
    assert dep.pairs == dependent_oracle_pairs(ctx, zoo["c5"])


def test_k4_no_pairs(zoo):
    _, _, _, dep = pipeline_to_dep(zoo["k4"])
    assert dep.pairs == set()


def test_ladder_dependent_subset():
    g = generators.ladder(4)
    ctx, _, _, dep = pipeline_to_dep(g)
    assert dep.pairs == dependent_oracle_pairs(ctx, g)


def test_random_biconnected_matches_oracle():
    hits = 0
    for i in range(12):
        g = generators.biconnected_random(14 + (i % 5), 900 + i)
        ctx, _, _, dep = pipeline_to_dep(g, seed=50 + i)
        expect = dependent_oracle_pairs(ctx, g)
        assert dep.pairs == expect, (g.edges, dep.pairs, expect)
        hits += len(expect)
    assert hits > 0


def test_footprint_and_overlap_bound():
    g = generators.ladder(5)
    ctx = build_context(g, 77)
    eng = CongestEngine(g)
    cutv, pre = detect_cut_vertices(ctx, eng)
    dep = detect_dependent_pairs(ctx, eng, pre, cutv.spanning_edges)
    # engine did not raise FootprintViolation; audit the ledger directly
    for y in range(g.n):
        st = eng.algos.get(f"dep:{y}")
        if st is None:
            continue
        inside = set(ctx.t.subtree(y))
        for (a, b) in st.edge_words:
            assert a in inside or b in inside
    # every edge participates in at most |pi(s,u)| + |pi(s,v)| algorithms
    for (u, v) in g.edges:
        count = sum(1 for y in range(g.n)
                    if (u, v) in eng.algos.get(f"dep:{y}", _EMPTY).edge_words)
        assert count <= len(ctx.paths[u]) + len(ctx.paths[v])


class _Empty:
    edge_words: dict = {}


_EMPTY = _Empty()
