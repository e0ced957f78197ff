import math

import pytest
from scipy import stats as sstats

from expanderlay import (
    NotConnectedError,
    VerificationPolicy,
    WeightedGraph,
    build_overlay,
    orchestrate_build,
    worker_generate_trees,
)
from expanderlay.trees import overlay_to_text

from conftest import complete_graph, path_graph, weighted_triangle


def test_worker_count_invariance(k64):
    texts = []
    for w in (1, 4, 8):
        res = orchestrate_build(k64, seed=3, workers=w)
        texts.append(overlay_to_text(res.overlay))
        assert res.worker_count == w
    assert texts[0] == texts[1] == texts[2]


def test_round_requests_double(k64):
    res = orchestrate_build(k64, seed=3)
    requested = [r.requested for r in res.rounds]
    assert requested == [2**i for i in range(len(requested))]
    totals = [r.total_trees for r in res.rounds]
    assert totals == [2 ** (i + 1) - 1 for i in range(len(totals))]


def test_orchestrate_equals_direct_build(k64):
    res = orchestrate_build(k64, seed=11)
    direct = build_overlay(k64, res.total_trees, seed=11)
    assert overlay_to_text(res.overlay) == overlay_to_text(direct)


def test_orchestrate_succeeds_on_complete_graph(k64):
    res = orchestrate_build(k64, seed=0)
    assert res.succeeded
    assert res.rounds[-1].passed
    assert res.total_trees >= 1
    assert res.round_cap == math.ceil(math.log2(64)) + 1


def test_orchestrate_tree_input_flagged_failed():
    # a path is its own unique spanning tree: rounds cannot change the overlay,
    # so with a verification that a tree cannot satisfy the build must flag failure
    g = path_graph(8)
    policy = VerificationPolicy(method="parallel", walk_count=1, walk_length=1)
    res = orchestrate_build(g, seed=0, policy=policy)
    assert not res.succeeded
    assert len(res.rounds) == res.round_cap
    for r in res.rounds:
        assert r.distinct_edges == 7
        assert not r.passed


def test_orchestrate_round_log_fields(k64):
    res = orchestrate_build(k64, seed=3)
    for i, r in enumerate(res.rounds):
        assert r.round_index == i + 1
        assert r.verification.n == 64
        assert r.passed == r.verification.success
    assert res.rounds[-1].distinct_edges == res.overlay.distinct_edge_count


def test_orchestrate_disconnected_message():
    g = WeightedGraph(4, [(0, 1, 1.0), (2, 3, 1.0)])
    with pytest.raises(NotConnectedError, match="graph not connected"):
        orchestrate_build(g, seed=0)


def test_orchestrate_round_cap_override():
    g = path_graph(8)
    policy = VerificationPolicy(method="parallel", walk_count=1, walk_length=1)
    res = orchestrate_build(g, seed=0, policy=policy, round_cap=2)
    assert not res.succeeded
    assert len(res.rounds) == 2


def test_orchestrate_resistance_scaled_mode(k64):
    res = orchestrate_build(k64, seed=5, weight_mode="resistance-scaled")
    assert res.overlay.weight_mode == "resistance-scaled"
    assert res.weight_mode == "resistance-scaled"


def test_worker_generate_trees_basic():
    g = complete_graph(5)
    seeds = [(0, 0, i) for i in range(4)]
    trees = worker_generate_trees(g, 4, seeds)
    assert len(trees) == 4
    for t in trees:
        assert len(t.edges) == 4
        assert WeightedGraph(5, list(t.edges)).is_connected


def test_worker_generate_trees_validates_stream():
    g = complete_graph(5)
    with pytest.raises(ValueError):
        worker_generate_trees(g, 3, [(0, 0, 0)])


def test_worker_streams_statistically_consistent():
    # two disjoint seed substreams should produce indistinguishable
    # edge-frequency tables (chi-squared homogeneity, fixed seed)
    g = weighted_triangle()
    tables = []
    for chunk in range(2):
        seeds = [(0, 0, i) for i in range(chunk * 500, chunk * 500 + 500)]
        trees = worker_generate_trees(g, 500, seeds)
        counts = {(0, 1): 0, (1, 2): 0, (0, 2): 0}
        for t in trees:
            for e in t.edges:
                counts[e[:2]] += 1
        tables.append([counts[(0, 1)], counts[(1, 2)], counts[(0, 2)]])
    _, p, _, _ = sstats.chi2_contingency(tables)
    assert p > 0.01


def test_worker_frequencies_match_oracle():
    # stream frequencies agree with the determinant-ratio inclusion probabilities
    g = weighted_triangle()
    seeds = [(0, 0, i) for i in range(2000)]
    trees = worker_generate_trees(g, 2000, seeds)
    count_heavy = sum(1 for t in trees if any(e[:2] == (0, 2) for e in t.edges))
    assert abs(count_heavy / 2000 - 9.0 / 11.0) < 0.03


def test_verification_policy_methods(k64):
    o = build_overlay(k64, 3, seed=0)
    rep_m = VerificationPolicy(method="mixing").run(o, seed=0)
    rep_p = VerificationPolicy(method="parallel").run(o, seed=0)
    assert rep_m.mode in ("single", "weighted", "accumulate")
    assert rep_p.mode == "parallel"
    with pytest.raises(ValueError):
        VerificationPolicy(method="bogus").run(o, seed=0)
