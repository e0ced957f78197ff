import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expanderlay import (
    CutSet,
    GraphError,
    NotConnectedError,
    ParseError,
    SizeCapError,
    WeightedGraph,
    edge_boundary,
    edge_statistics,
    enumerate_spanning_trees,
    expansion_bruteforce,
    parse_graph,
    spanning_tree_total_weight,
)

from conftest import (
    complete_graph,
    cycle_graph,
    path_graph,
    small_corpus,
    weighted_triangle,
)


# -- parsing -----------------------------------------------------------------


def test_parse_single_edge():
    g = parse_graph("0 1 1.0")
    assert g.n == 2
    assert g.m == 1
    assert g.total_weight == 1.0


def test_parse_triangle_total_weight():
    g = parse_graph("0 1 1\n1 2 2\n2 0 3")
    assert g.n == 3
    assert g.m == 3
    assert g.total_weight == 6.0


def test_parse_negative_weight_message():
    with pytest.raises(ParseError, match="non-positive weight at line 1"):
        parse_graph("0 1 -1")


def test_parse_zero_weight():
    with pytest.raises(ParseError, match="non-positive weight at line 2"):
        parse_graph("0 1 1\n1 2 0")


def test_parse_self_loop():
    with pytest.raises(ParseError, match="self-loop at line 1"):
        parse_graph("3 3 1.0")


def test_parse_duplicate_edge_reports_both_lines():
    with pytest.raises(ParseError, match=r"duplicate edge at line 3 \(first seen at line 1\)"):
        parse_graph("0 1 1\n1 2 1\n1 0 2")


def test_parse_malformed_line():
    with pytest.raises(ParseError, match="malformed line 2"):
        parse_graph("0 1 1\n0 1\n")


def test_parse_empty_input():
    with pytest.raises(ParseError, match="no edges found"):
        parse_graph("# only a comment\n")


def test_parse_skips_comments_and_blank_lines():
    g = parse_graph("# header\n\n0 1 1.0  # trailing\n1 2 2.0\n")
    assert g.m == 2


def test_parse_roundtrip_canonical():
    g = parse_graph("2 0 3\n0 1 1\n1 2 2")
    assert parse_graph(g.to_text()).edges == g.edges
    assert parse_graph(g.to_text()).digest() == g.digest()


@given(
    st.lists(
        st.tuples(
            st.integers(0, 12),
            st.integers(0, 12),
            st.floats(0.01, 100.0, allow_nan=False),
        ),
        min_size=1,
        max_size=30,
    )
)
@settings(max_examples=100, deadline=None)
def test_parse_roundtrip_property(raw):
    seen = set()
    edges = []
    for u, v, w in raw:
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key in seen:
            continue
        seen.add(key)
        edges.append((u, v, w))
    if not edges:
        return
    text = "".join(f"{u} {v} {w!r}\n" for u, v, w in edges)
    g = parse_graph(text)
    again = parse_graph(g.to_text())
    assert again.edges == g.edges
    assert again.n == g.n
    assert math.isclose(again.total_weight, g.total_weight)


# -- construction and validation -----------------------------------------------


def test_graph_rejects_bad_edges():
    with pytest.raises(GraphError):
        WeightedGraph(3, [(0, 0, 1.0)])
    with pytest.raises(GraphError):
        WeightedGraph(3, [(0, 1, -2.0)])
    with pytest.raises(GraphError):
        WeightedGraph(3, [(0, 1, 1.0), (1, 0, 1.0)])
    with pytest.raises(GraphError):
        WeightedGraph(2, [(0, 5, 1.0)])


def test_adjacency_roundtrip():
    g = weighted_triangle()
    h = WeightedGraph.from_adjacency(g.adjacency_matrix())
    assert h.edges == g.edges


def test_from_adjacency_rejects_asymmetric():
    A = np.array([[0.0, 1.0], [2.0, 0.0]])
    with pytest.raises(GraphError):
        WeightedGraph.from_adjacency(A)


def test_laplacian_quadratic_form_agree():
    g = small_corpus()["c5_weighted"]
    L = g.laplacian()
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.normal(size=g.n)
        assert math.isclose(g.quadratic_form(x), float(x @ L @ x), rel_tol=1e-12)


def test_degrees_and_neighbors():
    g = cycle_graph(5)
    assert all(g.degree(v) == 2 for v in range(5))
    assert set(g.neighbors(0)) == {1, 4}
    assert g.max_degree() == 2
    assert math.isclose(g.average_degree(), 2.0)


def test_connectivity_and_components():
    g = WeightedGraph(4, [(0, 1, 1.0), (2, 3, 1.0)])
    assert not g.is_connected
    comps = g.components()
    assert sorted(sorted(c) for c in comps) == [[0, 1], [2, 3]]


# -- boundaries and expansion ---------------------------------------------------


def test_boundary_path_leaf():
    g = path_graph(3)
    cut = edge_boundary(g, [0])
    assert isinstance(cut, CutSet)
    assert cut.size == 1
    assert cut.edges == ((0, 1, 1.0),)


def test_boundary_k4_two_vertices():
    g = complete_graph(4)
    assert edge_boundary(g, [0, 1]).size == 4


def test_boundary_c8_contiguous_arc():
    g = cycle_graph(8)
    assert edge_boundary(g, [0, 1, 2, 3]).size == 2


def test_boundary_rejects_improper_subsets():
    g = path_graph(3)
    with pytest.raises(GraphError):
        edge_boundary(g, [])
    with pytest.raises(GraphError):
        edge_boundary(g, [0, 1, 2])


def test_expansion_k4():
    res = expansion_bruteforce(complete_graph(4))
    assert res.value == 2.0
    assert len(res.witness) == 2


def test_expansion_c8():
    assert expansion_bruteforce(cycle_graph(8)).value == 0.5


def test_expansion_disconnected_zero():
    g = WeightedGraph(4, [(0, 1, 1.0), (2, 3, 1.0)])
    res = expansion_bruteforce(g)
    assert res.value == 0.0


def test_expansion_vertex_mode():
    # star: removing the hub isolates everything; S = one leaf has boundary {hub}
    res = expansion_bruteforce(complete_graph(4), mode="vertex")
    assert res.value > 0


def test_expansion_size_cap():
    g = path_graph(25)
    with pytest.raises(SizeCapError):
        expansion_bruteforce(g)


# -- spanning tree totals ---------------------------------------------------------


def test_tree_total_k3():
    assert math.isclose(spanning_tree_total_weight(complete_graph(3)), 3.0, rel_tol=1e-12)


def test_tree_total_weighted_triangle():
    assert math.isclose(spanning_tree_total_weight(weighted_triangle()), 11.0, rel_tol=1e-12)


def test_tree_total_k4():
    assert math.isclose(spanning_tree_total_weight(complete_graph(4)), 16.0, rel_tol=1e-12)


def test_tree_total_cayley():
    # complete graphs: n^(n-2) spanning trees
    for n in (5, 6, 7):
        total = spanning_tree_total_weight(complete_graph(n))
        assert math.isclose(total, n ** (n - 2), rel_tol=1e-9)


def test_tree_total_disconnected_is_zero():
    g = WeightedGraph(4, [(0, 1, 1.0), (2, 3, 1.0)])
    assert spanning_tree_total_weight(g) == 0.0


def test_tree_total_matches_enumeration_on_corpus():
    for name, g in small_corpus().items():
        total = math.fsum(
            math.prod(w for _, _, w in t) for t in enumerate_spanning_trees(g)
        )
        det_total = spanning_tree_total_weight(g)
        assert math.isclose(det_total, total, rel_tol=1e-9), name


def test_enumerate_counts():
    assert sum(1 for _ in enumerate_spanning_trees(complete_graph(4))) == 16
    assert sum(1 for _ in enumerate_spanning_trees(cycle_graph(5))) == 5


def test_enumerate_size_cap():
    with pytest.raises(SizeCapError):
        list(enumerate_spanning_trees(complete_graph(12), combination_cap=1000))


# -- edge statistics ----------------------------------------------------------------


def test_edge_statistics_tree_bridges():
    g = path_graph(5)
    stats = edge_statistics(g)
    assert np.allclose(stats.probability, 1.0)


def test_edge_statistics_k3():
    stats = edge_statistics(complete_graph(3))
    assert np.allclose(stats.probability, 2.0 / 3.0)


def test_edge_statistics_weighted_triangle():
    g = weighted_triangle()
    stats = edge_statistics(g)
    by_edge = dict(zip(stats.edges, stats.probability))
    # heaviest edge (0,2,w=3): 1 - 2/11
    assert math.isclose(by_edge[(0, 2)], 9.0 / 11.0, rel_tol=1e-12)
    assert math.isclose(by_edge[(0, 1)], 1.0 - 6.0 / 11.0, rel_tol=1e-12)


def test_edge_statistics_sum_is_n_minus_1():
    for name, g in small_corpus().items():
        stats = edge_statistics(g)
        assert math.isclose(stats.probability.sum(), g.n - 1, rel_tol=1e-9), name


def test_edge_statistics_match_enumeration_on_corpus():
    for name, g in small_corpus().items():
        stats = edge_statistics(g)
        kappa = math.fsum(
            math.prod(w for _, _, w in t) for t in enumerate_spanning_trees(g)
        )
        containing = {e: 0.0 for e in stats.edges}
        for t in enumerate_spanning_trees(g):
            tw = math.prod(w for _, _, w in t)
            for u, v, _ in t:
                containing[(u, v)] += tw
        for (u, v), p in zip(stats.edges, stats.probability):
            exact = containing[(u, v)] / kappa
            assert math.isclose(p, exact, rel_tol=1e-9), (name, (u, v))


def test_edge_statistics_resistance_relation():
    g = weighted_triangle()
    stats = edge_statistics(g)
    for (u, v), p, R in zip(stats.edges, stats.probability, stats.resistance):
        assert math.isclose(R, p / g.weight(u, v), rel_tol=1e-12)


def test_edge_statistics_requires_connected():
    g = WeightedGraph(4, [(0, 1, 1.0), (2, 3, 1.0)])
    with pytest.raises(NotConnectedError):
        edge_statistics(g)


def test_digest_distinguishes_graphs():
    assert complete_graph(3).digest() != weighted_triangle().digest()
    assert complete_graph(3).digest() == complete_graph(3).digest()
