import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expanderlay import (
    OverlayGraph,
    SystemObservation,
    anonymity_degree,
    attack_cost_report,
    build_overlay,
    chernoff_tail_bound,
    confinement_bound,
    hidden_state_probability,
    max_unmonitored_bound,
    monitor_count_estimate,
    path_probability,
    prob_route_monitored,
    rbc_aggregate,
    rbc_table,
    uniform_kernel,
)

from conftest import complete_graph, cycle_graph


# -- monitoring probability ----------------------------------------------------


def test_prob_route_monitored_known_values():
    p = prob_route_monitored(1021, 700, 3, 6)
    exact = 1 - Fraction(
        math.prod(700 - i for i in range(19)), math.prod(1021 - i for i in range(19))
    )
    assert p >= 0.99
    assert abs(p - float(exact)) <= 1e-12
    assert round(p, 4) == 0.9993


def test_prob_route_monitored_no_oblivious():
    assert prob_route_monitored(50, 0, 2, 3) == 1.0


def test_prob_route_monitored_all_oblivious():
    assert prob_route_monitored(50, 50, 2, 3) == 0.0


def test_prob_route_monitored_validation():
    with pytest.raises(ValueError):
        prob_route_monitored(10, 11, 1, 1)
    with pytest.raises(ValueError):
        prob_route_monitored(10, 5, 5, 2)  # r*l must stay below N


@given(st.integers(20, 200), st.integers(1, 3), st.integers(1, 4))
@settings(max_examples=60, deadline=None)
def test_prob_route_monotone_in_oblivious_count(N, r, l):
    if r * l >= N:
        return
    values = [prob_route_monitored(N, C, r, l) for C in range(0, N + 1, max(1, N // 7))]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))
    assert all(0.0 <= v <= 1.0 for v in values)


# -- confinement and capacity ---------------------------------------------------


def test_confinement_bound_examples():
    assert confinement_bound(0.5, 6) == 0.015625
    assert confinement_bound(1.0, 17) == 1.0
    assert math.isclose(confinement_bound(700 / 1021, 6), (700 / 1021) ** 6, rel_tol=1e-15)
    # frozen from direct evaluation of (700/1021)^6
    assert math.isclose(confinement_bound(700 / 1021, 6), 0.10385652509346845, rel_tol=1e-12)


def test_confinement_bound_validation():
    with pytest.raises(ValueError):
        confinement_bound(1.2, 3)
    with pytest.raises(ValueError):
        confinement_bound(0.5, 0)


def test_max_unmonitored_known_values():
    b = max_unmonitored_bound(1021, 6, 0.5)
    assert math.isclose(b.real, 909.6076, abs_tol=5e-5)
    assert b.integer == 910


def test_max_unmonitored_limits():
    assert max_unmonitored_bound(1000, 1, 0.5).integer == 500
    near_one = max_unmonitored_bound(1000, 4, 0.999999)
    assert near_one.integer >= 999


def test_max_unmonitored_validation():
    with pytest.raises(ValueError):
        max_unmonitored_bound(100, 0, 0.5)
    with pytest.raises(ValueError):
        max_unmonitored_bound(100, 3, 0.0)
    with pytest.raises(ValueError):
        max_unmonitored_bound(100, 3, 1.0)


# -- chernoff tail ---------------------------------------------------------------


def test_chernoff_known_values():
    mu = 18 * (1021 - 700) / 1021
    res = chernoff_tail_bound(1021, 700, 18, delta=mu)
    assert math.isclose(res.mu, 5778.0 / 1021.0, rel_tol=1e-12)
    assert math.isclose(res.bound, math.exp(-2 * mu * mu / 18), rel_tol=1e-12)
    assert math.isclose(res.bound, 0.028480, abs_tol=5e-6)


def test_chernoff_no_oblivious_reduction():
    # C=0: mu = t, bound reduces to exp(-2 delta^2 / t) for any delta in (0, t]
    res = chernoff_tail_bound(100, 0, 10, delta=2.0)
    assert res.mu == 10.0
    assert math.isclose(res.bound, math.exp(-2 * 4.0 / 10), rel_tol=1e-12)


def test_chernoff_small_delta_approaches_one():
    res = chernoff_tail_bound(1021, 700, 18, delta=1e-9)
    assert res.bound > 0.999999


def test_chernoff_delta_validation():
    with pytest.raises(ValueError):
        chernoff_tail_bound(100, 50, 10, delta=0.0)
    with pytest.raises(ValueError):
        chernoff_tail_bound(100, 50, 10, delta=6.0)  # >= t - mu = 5


# -- hidden state and path probability -----------------------------------------------


def test_path_probability_example():
    assert math.isclose(path_probability(1024, 1024), 10.0 / 1024, rel_tol=1e-12)


def test_path_probability_r_invariance():
    vals = {path_probability(1024, 1024, r_max=r) for r in (1, 2, 8)}
    assert len(vals) == 1


def test_path_probability_boundary():
    assert path_probability(1024, 10) == 1.0


def test_path_probability_validation():
    with pytest.raises(ValueError):
        path_probability(1024, 5)  # below log2(N)


def test_hidden_state_single_message():
    obs = SystemObservation(n_nodes=1024, n_mix=1024, n_messages=1)
    res = hidden_state_probability(obs)
    assert math.isclose(res.probability, 10.0 / 1024, rel_tol=1e-12)
    assert math.isclose(res.per_message_probability, 10.0 / 1024, rel_tol=1e-12)


def test_hidden_state_two_messages():
    obs = SystemObservation(n_nodes=1024, n_mix=1024, n_messages=2)
    res = hidden_state_probability(obs)
    assert math.isclose(res.probability, (10.0 / 1024) ** 2, rel_tol=1e-12)
    assert math.isclose(res.log2_probability, 2 * math.log2(10.0 / 1024), rel_tol=1e-12)


def test_hidden_states_equiprobable():
    obs = SystemObservation(n_nodes=512, n_mix=2048, n_messages=3)
    assert hidden_state_probability(obs) == hidden_state_probability(obs)


# -- routing betweenness -------------------------------------------------------------


def test_rbc_source_delta_is_one():
    o = OverlayGraph.full(complete_graph(6))
    table = rbc_table(o, source=2, hops=4)
    assert table.delta[2] == 1.0


def test_rbc_complete_overlay_symmetric():
    o = OverlayGraph.full(complete_graph(8))
    table = rbc_table(o, source=0, hops=5)
    non_source = table.delta[1:]
    assert float(non_source.max() - non_source.min()) <= 1e-12


def test_rbc_ring_first_hop():
    o = OverlayGraph.full(cycle_graph(8))
    table = rbc_table(o, source=0, hops=2)
    assert math.isclose(table.occupancy[1][1], 0.5, rel_tol=1e-12)
    assert math.isclose(table.occupancy[1][7], 0.5, rel_tol=1e-12)
    assert table.occupancy[1][0] == 0.0


def test_rbc_occupancy_rows_are_distributions():
    o = build_overlay(complete_graph(10), 2, seed=0)
    table = rbc_table(o, source=3, hops=6)
    assert np.allclose(table.occupancy.sum(axis=1), 1.0)
    assert table.occupancy.shape == (7, 10)


def test_rbc_custom_kernel_validation():
    o = OverlayGraph.full(complete_graph(4))
    bad = np.zeros((4, 4))
    with pytest.raises(ValueError, match="invalid kernel"):
        rbc_table(o, source=0, hops=2, kernel=bad)
    with pytest.raises(ValueError, match="invalid kernel"):
        rbc_table(o, source=0, hops=2, kernel=np.ones((3, 3)) / 3.0)


def test_uniform_kernel_row_stochastic():
    o = build_overlay(complete_graph(9), 2, seed=1)
    K = uniform_kernel(o)
    assert np.allclose(K.sum(axis=1), 1.0)
    assert (K >= 0).all()


def test_rbc_aggregate_mean():
    o = OverlayGraph.full(complete_graph(6))
    agg = rbc_aggregate(o, sources=[0, 1], hops=3)
    t0 = rbc_table(o, 0, 3).delta
    t1 = rbc_table(o, 1, 3).delta
    assert np.allclose(agg, (t0 + t1) / 2.0)


# -- anonymity degree ------------------------------------------------------------------


def test_anonymity_uniform():
    rep = anonymity_degree([0.25, 0.25, 0.25, 0.25])
    assert rep.degree == 1.0
    assert math.isclose(rep.entropy_bits, 2.0, rel_tol=1e-12)


def test_anonymity_point_mass():
    rep = anonymity_degree([1.0, 0.0, 0.0])
    assert rep.degree == 0.0


def test_anonymity_half_half():
    rep = anonymity_degree([0.5, 0.5, 0.0, 0.0])
    assert math.isclose(rep.entropy_bits, 1.0, rel_tol=1e-12)
    assert math.isclose(rep.max_entropy_bits, 2.0, rel_tol=1e-12)
    assert abs(rep.degree - 0.5) <= 1e-12


def test_anonymity_validation():
    with pytest.raises(ValueError):
        anonymity_degree([1.0])
    with pytest.raises(ValueError):
        anonymity_degree([0.7, 0.7])
    with pytest.raises(ValueError):
        anonymity_degree([1.2, -0.2])


@given(st.lists(st.floats(0.001, 1.0), min_size=2, max_size=12))
@settings(max_examples=80, deadline=None)
def test_anonymity_properties(raw):
    total = sum(raw)
    probs = [x / total for x in raw]
    rep = anonymity_degree(probs)
    assert -1e-9 <= rep.degree <= 1.0 + 1e-9
    # permutation invariance
    rep2 = anonymity_degree(list(reversed(probs)))
    assert math.isclose(rep.degree, rep2.degree, rel_tol=1e-9, abs_tol=1e-12)


# -- attack costs and monitor count -----------------------------------------------------


def test_attack_cost_cover_traffic():
    g = complete_graph(7)
    o = OverlayGraph.full(g)
    rep = attack_cost_report(o, attackers=2)
    assert rep.cover_traffic_messages == o.max_degree() * 7
    assert rep.max_degree == 6


def test_attack_cost_predecessor_rounds():
    g = complete_graph(10)
    o = OverlayGraph.full(g)
    rep = attack_cost_report(o, attackers=2)
    assert math.isclose(rep.predecessor_rounds, (10 / 2) ** 2 * math.log(10), rel_tol=1e-12)


def test_attack_cost_example_ratio():
    # n=1000, 100 attackers: (n/c)^2 ln n = 100 ln 1000 = 690.78
    g = complete_graph(40)
    o = OverlayGraph.full(g)
    rep = attack_cost_report(o, attackers=4)
    assert math.isclose(rep.predecessor_rounds, 100 * math.log(40), rel_tol=1e-12)
    assert math.isclose(100 * math.log(1000), 690.7755, abs_tol=5e-5)


def test_attack_cost_near_full_compromise():
    g = complete_graph(12)
    o = OverlayGraph.full(g)
    rep = attack_cost_report(o, attackers=11)
    assert math.isclose(rep.predecessor_rounds, (12 / 11) ** 2 * math.log(12), rel_tol=1e-12)


def test_attack_cost_validation():
    o = OverlayGraph.full(complete_graph(5))
    with pytest.raises(ValueError):
        attack_cost_report(o, attackers=0)
    with pytest.raises(ValueError):
        attack_cost_report(o, attackers=6)


def test_monitor_count_estimate_examples():
    assert monitor_count_estimate(1024, 10) == 103
    assert monitor_count_estimate(50, 1) == 50
    assert monitor_count_estimate(50, 50) == 1


def test_monitor_count_estimate_validation():
    with pytest.raises(ValueError):
        monitor_count_estimate(0, 3)
    with pytest.raises(ValueError):
        monitor_count_estimate(10, 0)
