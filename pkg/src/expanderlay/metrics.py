"""Analytic monitoring, confinement, betweenness and anonymity metrics.

Log-base conventions: entropy-based quantities use base 2,
concentration/attack bounds use the natural log, and each function's
docstring states which applies. Probability-product formulas state their
index conventions in their own docstrings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import GraphError
from .routing import segment_length
from .trees import OverlayGraph

__all__ = [
    "prob_route_monitored",
    "confinement_bound",
    "UnmonitoredBound",
    "max_unmonitored_bound",
    "ChernoffBound",
    "chernoff_tail_bound",
    "path_probability",
    "SystemObservation",
    "HiddenStateResult",
    "hidden_state_probability",
    "uniform_kernel",
    "RbcTable",
    "rbc_table",
    "rbc_aggregate",
    "AnonymityReport",
    "anonymity_degree",
    "AttackCostReport",
    "attack_cost_report",
    "monitor_count_estimate",
]


def prob_route_monitored(N: int, C: int, r: int, l: int) -> float:
    """Probability that a route of r segments of l hops meets a monitor.

    Models the r*l + 1 route positions as uniform draws without
    replacement from N vertices of which C are oblivious: the route stays
    unseen with probability prod_{i=0}^{r*l} (C - i) / (N - i). The
    product runs over the inclusive index range 0..r*l, deliberately one
    more factor than the hop count. Note r counts walk segments; a route
    with j intermediates has j+1 segments.
    """
    if N < 1:
        raise GraphError("N must be >= 1")
    if not 0 <= C <= N:
        raise GraphError("C must lie in [0, N]")
    if r < 1 or l < 1:
        raise GraphError("r and l must be >= 1")
    t = r * l
    if t >= N:
        raise GraphError(f"route draws r*l = {t} must be < N = {N}")
    unseen = 1.0
    for i in range(t + 1):
        unseen *= max(C - i, 0) / (N - i)
    return 1.0 - unseen


def confinement_bound(beta: float, t: int) -> float:
    """Upper bound beta^t on a t-hop walk staying inside a fixed fraction beta
    of the vertices, under the idealized near-uniform-position model."""
    if not 0.0 <= beta <= 1.0:
        raise GraphError("beta must lie in [0, 1]")
    if t < 1:
        raise GraphError("t must be >= 1")
    return beta ** t


@dataclass(frozen=True)
class UnmonitoredBound:
    """Largest oblivious-vertex budget keeping detection probability at target."""

    real: float
    integer: int
    N: int
    t: int
    target: float


def max_unmonitored_bound(N: int, t: int, target: float) -> UnmonitoredBound:
    """Solve beta^t = target for C = beta * N: the most vertices that may stay
    oblivious while a t-hop route still evades detection with at most
    ``target`` probability.

    Returns the real bound target^(1/t) * N and its round-to-nearest
    integer, which can sit just above the real value.
    """
    if N < 1:
        raise GraphError("N must be >= 1")
    if t < 1:
        raise GraphError("t must be >= 1")
    if not 0.0 < target < 1.0:
        raise GraphError("target must lie in (0, 1)")
    real = target ** (1.0 / t) * N
    return UnmonitoredBound(
        real=real, integer=int(real + 0.5), N=N, t=t, target=target
    )


@dataclass(frozen=True)
class ChernoffBound:
    mu: float
    delta: float
    bound: float
    N: int
    C: int
    t: int


def chernoff_tail_bound(N: int, C: int, t: int, delta: float) -> ChernoffBound:
    """Lower-tail bound exp(-2 delta^2 / t) on the monitor encounters of a
    t-hop route.

    mu = t * (N - C) / N is the expected number of monitored positions.
    The bound (natural log scale) controls P[X <= mu - delta]; at
    delta = mu it bounds the probability of meeting no monitor at all.
    delta must satisfy 0 < delta < t - mu; when C = 0 (mu = t) any
    delta in (0, t] is accepted and the formula reduces to
    exp(-2 delta^2 / t).
    """
    if N < 1:
        raise GraphError("N must be >= 1")
    if not 0 <= C <= N:
        raise GraphError("C must lie in [0, N]")
    if t < 1:
        raise GraphError("t must be >= 1")
    mu = t * (N - C) / N
    if delta <= 0:
        raise GraphError("delta must be positive")
    if mu < t:
        if delta >= t - mu:
            raise GraphError(f"delta must be < t - mu = {t - mu:.6g}")
    elif delta > t:
        raise GraphError("delta must be <= t when C = 0")
    return ChernoffBound(
        mu=mu, delta=float(delta), bound=math.exp(-2.0 * delta * delta / t),
        N=N, C=C, t=t,
    )


def path_probability(N: int, n_mix: int, r_max: int = 1) -> float:
    """Chance log2(N) / n_mix that a fixed mix node relays a given message.

    Uniform over r_max allowed intermediate counts, each route spends
    log2(N) hops per n_mix eligible relays; the r_max choices cancel, so
    the result is independent of r_max (kept as a parameter to document
    that invariance).
    """
    if N < 2:
        raise GraphError("N must be >= 2")
    if r_max < 1:
        raise GraphError("r_max must be >= 1")
    if n_mix < math.log2(N):
        raise GraphError("n_mix must be >= log2(N) for a valid probability")
    return math.log2(N) / n_mix


@dataclass(frozen=True)
class SystemObservation:
    """What an observer sees: message count and the routing constraint set."""

    n_nodes: int
    n_mix: int
    n_messages: int
    r_max: int = 1


@dataclass(frozen=True)
class HiddenStateResult:
    """Probability that one concrete hidden relay assignment produced the
    observation; log2 value avoids underflow for large message counts."""

    per_message_probability: float
    log2_probability: float
    probability: float


def hidden_state_probability(obs: SystemObservation) -> HiddenStateResult:
    """Product of independent per-message path probabilities, in log space."""
    if obs.n_messages < 1:
        raise GraphError("n_messages must be >= 1")
    p = path_probability(obs.n_nodes, obs.n_mix, obs.r_max)
    log2p = obs.n_messages * math.log2(p)
    try:
        linear = 2.0 ** log2p
    except OverflowError:
        linear = 0.0
    return HiddenStateResult(
        per_message_probability=p, log2_probability=log2p, probability=linear
    )


# -- route betweenness -----------------------------------------------------------


def uniform_kernel(o: OverlayGraph) -> np.ndarray:
    """Row-stochastic uniform-neighbor transition matrix of the overlay."""
    K = np.zeros((o.n, o.n))
    for u in range(o.n):
        nbrs = o.neighbors(u)
        K[u, nbrs] = 1.0 / len(nbrs)
    return K


@dataclass(frozen=True)
class RbcTable:
    """Routing betweenness: expected visit mass per vertex under a kernel.

    ``occupancy[j]`` is the position distribution after j hops
    (occupancy[0] is the point mass on the source). ``delta[v]`` sums the
    per-hop visit probabilities over hops 1..hops for v != source; the
    source's entry is 1 by definition (it originates the route).
    ``predecessors[v]`` lists the vertices with kernel mass into v.
    """

    source: int
    target: int | None
    hops: int
    kernel_description: str
    occupancy: np.ndarray
    delta: np.ndarray
    predecessors: tuple[tuple[int, ...], ...]


def rbc_table(
    o: OverlayGraph,
    source: int,
    hops: int,
    kernel: np.ndarray | None = None,
    target: int | None = None,
) -> RbcTable:
    """Hop-indexed occupancy DP for a routing kernel, truncated at ``hops``.

    The kernel must be row-stochastic over the overlay's vertices (rows
    sum to 1); by default it is the uniform-neighbor kernel, matching the
    route simulator's walk. The target, when given, only labels the table:
    the kernel itself encodes any target-directed behavior.
    """
    n = o.n
    if not 0 <= source < n:
        raise GraphError("source out of range")
    if target is not None and not 0 <= target < n:
        raise GraphError("target out of range")
    if hops < 1:
        raise GraphError("hops must be >= 1")
    if kernel is None:
        kernel = uniform_kernel(o)
        description = "uniform-neighbor"
    else:
        kernel = np.asarray(kernel, dtype=float)
        description = "custom"
    if kernel.shape != (n, n):
        raise ValueError(f"invalid kernel: expected shape ({n}, {n})")
    if np.any(kernel < -1e-12):
        raise ValueError("invalid kernel: negative transition mass")
    rowsums = kernel.sum(axis=1)
    if np.max(np.abs(rowsums - 1.0)) > 1e-9:
        raise ValueError("invalid kernel: rows must sum to 1")

    occupancy = np.zeros((hops + 1, n))
    occupancy[0, source] = 1.0
    for j in range(hops):
        occupancy[j + 1] = occupancy[j] @ kernel
    delta = occupancy[1:].sum(axis=0)
    delta[source] = 1.0
    predecessors = tuple(
        tuple(int(u) for u in np.nonzero(kernel[:, v] > 0)[0]) for v in range(n)
    )
    return RbcTable(
        source=source,
        target=target,
        hops=hops,
        kernel_description=description,
        occupancy=occupancy,
        delta=delta,
        predecessors=predecessors,
    )


def rbc_aggregate(
    o: OverlayGraph, sources, hops: int, kernel: np.ndarray | None = None
) -> np.ndarray:
    """Mean delta over several sources (pairs aggregate since the kernel
    carries any target dependence)."""
    sources = list(sources)
    if not sources:
        raise ValueError("need at least one source")
    if kernel is None:
        kernel = uniform_kernel(o)
    total = np.zeros(o.n)
    for s in sources:
        total += rbc_table(o, int(s), hops, kernel=kernel).delta
    return total / len(sources)


# -- anonymity and attack cost ------------------------------------------------------


@dataclass(frozen=True)
class AnonymityReport:
    """Normalized entropy of an attacker's sender distribution."""

    probabilities: tuple[float, ...]
    entropy_bits: float
    max_entropy_bits: float
    degree: float


def anonymity_degree(probabilities) -> AnonymityReport:
    """d = H(p) / log2(N), the attacker-view entropy over N candidates
    normalized by its maximum (base 2 throughout).

    Uniform p gives d = 1, a point mass d = 0. The distribution must sum
    to 1 within 1e-9 and have at least two entries.
    """
    p = np.asarray(list(probabilities), dtype=float)
    if p.size < 2:
        raise GraphError("need at least 2 probabilities")
    if np.any(p < -1e-12):
        raise GraphError("probabilities must be nonnegative")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-9:
        raise GraphError(f"probabilities must sum to 1 (got {total})")
    p = np.clip(p, 0.0, 1.0)
    positive = p[p > 0]
    entropy = float(-(positive * np.log2(positive)).sum())
    max_entropy = math.log2(p.size)
    return AnonymityReport(
        probabilities=tuple(float(x) for x in p),
        entropy_bits=entropy,
        max_entropy_bits=max_entropy,
        degree=entropy / max_entropy,
    )


@dataclass(frozen=True)
class AttackCostReport:
    """Costs an attacker faces against the overlay (natural-log bounds)."""

    n: int
    attackers: int
    max_degree: int
    cover_traffic_messages: int
    predecessor_rounds: float
    segment_hops: int


def attack_cost_report(o: OverlayGraph, attackers: int) -> AttackCostReport:
    """Cover traffic d_max * n to blind a global observer, and
    (n / attackers)^2 * ln n expected rounds for a predecessor attack;
    both dwarf the per-segment route length reported alongside."""
    if not 1 <= attackers <= o.n:
        raise GraphError("attackers must lie in [1, n]")
    d_max = o.max_degree()
    return AttackCostReport(
        n=o.n,
        attackers=attackers,
        max_degree=d_max,
        cover_traffic_messages=d_max * o.n,
        predecessor_rounds=(o.n / attackers) ** 2 * math.log(o.n),
        segment_hops=segment_length(o),
    )


def monitor_count_estimate(N: int, l: int) -> int:
    """ceil(N / l) monitors suffice to expect one hit per l-hop segment."""
    if N < 1:
        raise GraphError("N must be >= 1")
    if l < 1:
        raise GraphError("l must be >= 1")
    return -(-N // l)
