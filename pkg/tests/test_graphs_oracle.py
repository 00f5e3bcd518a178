import pytest

from congestcuts import oracle
from congestcuts.errors import Disconnected, DuplicateEdge, SelfLoop
from congestcuts.graphs import (
    graph_to_json,
    load_graph,
    parse_edge_list,
    parse_json_graph,
)


def test_load_path3():
    g = load_graph([(0, 1), (1, 2)])
    assert g.n == 3
    assert g.edges == [(0, 1), (1, 2)]
    assert g.adj[1] == [0, 2]


def test_load_triangle():
    g = load_graph([(0, 1), (1, 2), (2, 0)])
    assert g.n == 3 and g.m == 3


def test_duplicate_edge_rejected():
    with pytest.raises(DuplicateEdge):
        load_graph([(0, 1), (0, 1)])
    with pytest.raises(DuplicateEdge):
        load_graph([(0, 1), (1, 0)])


def test_self_loop_rejected():
    with pytest.raises(SelfLoop):
        load_graph([(0, 0)])


def test_disconnected_rejected_unless_allowed():
    edges = [(0, 1), (2, 3)]
    with pytest.raises(Disconnected):
        load_graph(edges)
    g = load_graph(edges, allow_disconnected=True)
    assert g.n == 4


def test_edge_list_and_json_round_trip():
    g = parse_edge_list("# a comment\n0 1\n1 2  # trailing\n\n2 3\n")
    assert g.edges == [(0, 1), (1, 2), (2, 3)]
    g2 = parse_json_graph(graph_to_json(g))
    assert g2.edges == g.edges and g2.n == g.n


def test_connected_minus_basics(zoo):
    ok, comps = oracle.connected_minus(zoo["k3"], {0, 1})
    assert ok and len(comps) == 1
    ok, _ = oracle.connected_minus(zoo["p3"], {1})
    assert not ok
    ok, comps = oracle.connected_minus(zoo["c4"], {0, 2})
    assert not ok and len(comps) == 2


def test_cut_sets_on_named_graphs(zoo):
    assert oracle.all_cut_vertices(zoo["p3"]) == {1}
    assert oracle.all_cut_vertices(zoo["c4"]) == set()
    assert oracle.all_cut_vertices(zoo["k4"]) == set()
    assert oracle.all_cut_pairs(zoo["k4"]) == set()
    # C5: exactly the 5 non-adjacent pairs
    c5 = zoo["c5"]
    pairs = oracle.all_cut_pairs(c5)
    expect = {(u, v) for u in range(5) for v in range(u + 1, 5) if not c5.has_edge(u, v)}
    assert pairs == expect and len(pairs) == 5
    # every internal vertex of a tree is a cut vertex
    star = zoo["star"]
    assert oracle.all_cut_vertices(star) == {0}


def test_dfs_witness_agrees_with_brute_force(corpus32):
    for g in corpus32:
        assert oracle.articulation_points_dfs(g) == oracle.all_cut_vertices(g)
