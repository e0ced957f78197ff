import itertools

import numpy as np
import pytest

from expanderlay import WeightedGraph


def complete_graph(n, w=1.0):
    return WeightedGraph(n, [(u, v, w) for u, v in itertools.combinations(range(n), 2)])


def path_graph(n, w=1.0):
    return WeightedGraph(n, [(u, u + 1, w) for u in range(n - 1)])


def cycle_graph(n, w=1.0):
    edges = [(u, u + 1, w) for u in range(n - 1)] + [(0, n - 1, w)]
    return WeightedGraph(n, edges)


def star_graph(n, w=1.0):
    return WeightedGraph(n, [(0, v, w) for v in range(1, n)])


def weighted_triangle():
    # edge weights chosen so the tree-weight total is 1*2 + 2*3 + 3*1 = 11
    return WeightedGraph(3, [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)])


def near_regular_graph(n, d, seed):
    """Random simple connected graph, all degrees d (one d+1 when n*d is odd)."""
    rng = np.random.default_rng(seed)
    degs = [d] * n
    if (n * d) % 2:
        degs[0] += 1
    stub_template = np.repeat(np.arange(n), degs)
    for _ in range(10_000):
        stubs = stub_template.copy()
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        edges = set()
        ok = True
        for u, v in pairs:
            u, v = int(u), int(v)
            if u == v:
                ok = False
                break
            key = (u, v) if u < v else (v, u)
            if key in edges:
                ok = False
                break
            edges.add(key)
        if not ok:
            continue
        g = WeightedGraph(n, [(u, v, 1.0) for u, v in sorted(edges)])
        if g.is_connected:
            return g
    raise RuntimeError("configuration model failed to produce a connected simple graph")


@pytest.fixture(scope="session")
def base1021():
    return near_regular_graph(1021, 3, seed=42)


@pytest.fixture(scope="session")
def reg256():
    return near_regular_graph(256, 4, seed=7)


@pytest.fixture(scope="session")
def k64():
    return complete_graph(64)


# n <= 7 corpus used by the edge-statistics oracle tests: name -> graph
def small_corpus():
    return {
        "triangle": complete_graph(3),
        "weighted_triangle": weighted_triangle(),
        "path4_weighted": WeightedGraph(
            4, [(0, 1, 0.5), (1, 2, 2.0), (2, 3, 3.0)]
        ),
        "c4": cycle_graph(4),
        "c4_chord": WeightedGraph(
            4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0), (0, 2, 1.0)]
        ),
        "k4": complete_graph(4),
        "c5_weighted": WeightedGraph(
            5,
            [(0, 1, 1.0), (1, 2, 0.5), (2, 3, 2.0), (3, 4, 1.5), (0, 4, 3.0)],
        ),
        "k5_minus_edge": WeightedGraph(
            5,
            [
                (u, v, 1.0)
                for u, v in itertools.combinations(range(5), 2)
                if (u, v) != (3, 4)
            ],
        ),
        "star6": star_graph(6),
        "k6": complete_graph(6),
        "wheel7": WeightedGraph(
            7,
            [(0, v, 1.0) for v in range(1, 7)]
            + [(v, v + 1, 2.0) for v in range(1, 6)]
            + [(1, 6, 2.0)],
        ),
    }
