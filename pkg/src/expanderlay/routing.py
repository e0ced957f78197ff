"""Multi-segment random-walk routing over an overlay, and traffic simulation.

A route from s consists of walk segments of l hops each: one segment per
intermediate destination plus a final segment, followed by a shortest-path
splice from the walk endpoint to the target. l defaults to
floor(log_b n) with b the average overlay degree, so a segment is long
enough for the walk position to mix.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .graph import GraphError
from .trees import OverlayGraph

__all__ = [
    "MonitorSet",
    "RoutePlan",
    "TrafficTrace",
    "segment_length",
    "plan_route",
    "simulate_traffic",
    "wilson_interval",
    "visit_rates",
    "position_distribution",
]

MODES = ("incremental", "loose")
REVISIT_POLICIES = ("free", "non-revisiting")


def segment_length(o: OverlayGraph, log_base: float | None = None) -> int:
    """Walk hops per segment: floor(log_b n), clamped to at least 1.

    b defaults to the average overlay degree (clamped to >= 2 so the log
    is meaningful on degenerate overlays); pass ``log_base`` to override.
    """
    if o.n < 2:
        raise GraphError("routing needs at least 2 vertices")
    if log_base is None:
        b = max(o.average_degree(), 2.0)
    else:
        b = float(log_base)
        if b <= 1.0:
            raise ValueError("log_base must be > 1")
    return max(1, int(math.log(o.n) / math.log(b)))


@dataclass(frozen=True)
class MonitorSet:
    """A set of monitoring vertices M; C = n - |M| vertices stay oblivious."""

    vertices: frozenset[int]
    n: int

    def __post_init__(self):
        for v in self.vertices:
            if not 0 <= v < self.n:
                raise GraphError(f"monitor id {v} out of range")

    @property
    def count(self) -> int:
        return len(self.vertices)

    @property
    def oblivious_count(self) -> int:
        return self.n - len(self.vertices)

    def __contains__(self, v: int) -> bool:
        return v in self.vertices

    @classmethod
    def random(cls, n: int, count: int, seed: int = 0) -> "MonitorSet":
        if not 0 <= count <= n:
            raise GraphError("monitor count must lie in [0, n]")
        rng = np.random.default_rng((seed, 4))
        chosen = rng.choice(n, size=count, replace=False)
        return cls(vertices=frozenset(int(v) for v in chosen), n=n)

    @classmethod
    def from_vertices(cls, n: int, vertices) -> "MonitorSet":
        return cls(vertices=frozenset(int(v) for v in vertices), n=n)


@dataclass(frozen=True)
class RoutePlan:
    """A planned route: walk segments, then a splice to the target.

    ``segments`` holds r+1 vertex sequences (more in loose mode when
    intermediates extend the route), each of ``segment_hops`` hops;
    segment i starts where segment i-1 ended. ``intermediates`` are the
    endpoints of the non-final base segments. ``splice`` is a shortest
    path from the walk endpoint to the target (None when not computed);
    splice hops are bookkept separately from walk hops and excluded from
    the analytic route-length formulas.
    """

    source: int
    target: int
    intermediates: tuple[int, ...]
    segments: tuple[tuple[int, ...], ...]
    splice: tuple[int, ...] | None
    segment_hops: int
    mode: str
    revisit_policy: str
    extensions: int

    @property
    def walk_hops(self) -> int:
        return sum(len(seg) - 1 for seg in self.segments)

    @property
    def splice_hops(self) -> int:
        return len(self.splice) - 1 if self.splice else 0

    def walk_vertices(self) -> list[int]:
        """Source followed by every hop position, in order."""
        out = [self.source]
        for seg in self.segments:
            out.extend(seg[1:])
        return out

    def digest(self) -> str:
        payload = (
            f"{self.source}>{self.target}|{self.mode}|{self.revisit_policy}|"
            + ";".join(",".join(map(str, seg)) for seg in self.segments)
        )
        return hashlib.blake2b(payload.encode(), digest_size=8).hexdigest()


class _DeadEnd(Exception):
    pass


def _walk_segment(o, start, hops, rng, visited, non_revisiting):
    """One walk segment; appends to ``visited`` in non-revisiting mode."""
    seg = [start]
    u = start
    adj = o._adj_ids
    xs = rng.random(hops)
    for x in xs:
        nbrs = adj[u]
        if non_revisiting:
            cands = [int(v) for v in nbrs if int(v) not in visited]
            if not cands:
                raise _DeadEnd
            v = cands[int(x * len(cands))]
            visited.add(v)
        else:
            v = int(nbrs[int(x * len(nbrs))])
        seg.append(v)
        u = v
    return seg


def plan_route(
    o: OverlayGraph,
    source: int,
    target: int,
    r: int,
    mode: str = "incremental",
    revisit_policy: str = "free",
    seed: int = 0,
    rng=None,
    log_base: float | None = None,
    p_extend: float = 0.25,
    with_splice: bool = True,
    max_attempts: int = 100,
) -> RoutePlan:
    """Plan one route with r intermediate destinations (r+1 walk segments).

    ``incremental`` mode uses exactly r intermediates chosen by the walk;
    in ``loose`` mode each intermediate may prepend one extra segment with
    probability ``p_extend`` before forwarding. ``non-revisiting`` walks
    never repeat a vertex (including the source) across all walk segments;
    if the walk gets stuck the plan is retried, deterministically, up to
    ``max_attempts`` times. Pass ``rng`` to drive many plans from one
    generator; otherwise ``seed`` creates one.
    """
    n = o.n
    if not (0 <= source < n and 0 <= target < n):
        raise GraphError("route endpoints out of range")
    if source == target:
        raise GraphError("source and target must differ")
    if r < 1:
        raise ValueError("intermediate count r must be >= 1")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if revisit_policy not in REVISIT_POLICIES:
        raise ValueError(f"revisit_policy must be one of {REVISIT_POLICIES}")
    if not 0.0 <= p_extend <= 1.0:
        raise ValueError("p_extend must lie in [0, 1]")
    if rng is None:
        rng = np.random.default_rng((seed, 2))
    hops = segment_length(o, log_base)
    non_rev = revisit_policy == "non-revisiting"

    for _ in range(max_attempts):
        visited = {source} if non_rev else None
        segments = []
        intermediates = []
        extensions = 0
        u = source
        try:
            for i in range(r + 1):
                seg = _walk_segment(o, u, hops, rng, visited, non_rev)
                segments.append(tuple(seg))
                u = seg[-1]
                if i < r:
                    intermediates.append(u)
                    if mode == "loose" and rng.random() < p_extend:
                        seg = _walk_segment(o, u, hops, rng, visited, non_rev)
                        segments.append(tuple(seg))
                        u = seg[-1]
                        extensions += 1
        except _DeadEnd:
            continue
        splice = tuple(o.shortest_path(u, target)) if with_splice else None
        return RoutePlan(
            source=source,
            target=target,
            intermediates=tuple(intermediates),
            segments=tuple(segments),
            splice=splice,
            segment_hops=hops,
            mode=mode,
            revisit_policy=revisit_policy,
            extensions=extensions,
        )
    raise RuntimeError(
        f"could not complete a non-revisiting route after {max_attempts} attempts"
    )


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson 95% score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    # the score interval brackets p exactly; clamp out floating-point dust
    return (min(max(0.0, center - half), p), max(min(1.0, center + half), p))


@dataclass(frozen=True)
class TrafficTrace:
    """Aggregated simulation outcome plus one record per trial.

    Each record is (plan digest, monitored flag, first monitored hop index
    or None). A route counts as monitored when some walk vertex other than
    its own source and target lies in the monitor set; splice hops are not
    consulted (they sit outside the analytic model).
    """

    trials: int
    monitored_count: int
    fraction: float
    wilson_low: float
    wilson_high: float
    records: tuple[tuple[str, bool, int | None], ...]
    monitor_count: int
    n: int
    r: int
    segment_hops: int
    mode: str
    revisit_policy: str
    flow_count: int
    seed: int


def simulate_traffic(
    o: OverlayGraph,
    flows,
    monitors,
    r: int,
    trials: int,
    mode: str = "incremental",
    revisit_policy: str = "free",
    seed: int = 0,
    p_extend: float = 0.25,
    log_base: float | None = None,
) -> TrafficTrace:
    """Run ``trials`` routes and measure how often monitors see one.

    Flows are (source, target) pairs, cycled through across trials. All
    routes come from :func:`plan_route` driven by a single seeded
    generator, so the trace is a pure function of (inputs, seed).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    flows = [(int(s), int(t)) for s, t in flows]
    if not flows:
        raise ValueError("need at least one flow")
    for s, t in flows:
        if not (0 <= s < o.n and 0 <= t < o.n):
            raise GraphError("flow endpoints out of range")
        if s == t:
            raise GraphError("flow source and target must differ")
    if isinstance(monitors, MonitorSet):
        if monitors.n != o.n:
            raise GraphError("monitor set sized for a different graph")
        mset = monitors.vertices
    else:
        mset = frozenset(int(v) for v in monitors)
        for v in mset:
            if not 0 <= v < o.n:
                raise GraphError(f"monitor id {v} out of range")

    rng = np.random.default_rng((seed, 2))
    hops = segment_length(o, log_base)
    records = []
    monitored_count = 0
    for trial in range(trials):
        s, t = flows[trial % len(flows)]
        plan = plan_route(
            o, s, t, r,
            mode=mode,
            revisit_policy=revisit_policy,
            rng=rng,
            log_base=log_base,
            p_extend=p_extend,
            with_splice=False,
        )
        first_idx = None
        idx = 0
        for seg in plan.segments:
            for v in seg[1:]:
                idx += 1
                if v != s and v != t and v in mset:
                    first_idx = idx
                    break
            if first_idx is not None:
                break
        monitored = first_idx is not None
        monitored_count += monitored
        records.append((plan.digest(), monitored, first_idx))

    lo, hi = wilson_interval(monitored_count, trials)
    return TrafficTrace(
        trials=trials,
        monitored_count=monitored_count,
        fraction=monitored_count / trials,
        wilson_low=lo,
        wilson_high=hi,
        records=tuple(records),
        monitor_count=len(mset),
        n=o.n,
        r=r,
        segment_hops=hops,
        mode=mode,
        revisit_policy=revisit_policy,
        flow_count=len(flows),
        seed=seed,
    )


# -- occupancy helpers ---------------------------------------------------------


def visit_rates(
    o: OverlayGraph, total_hops: int, walk_hops: int | None = None, seed: int = 0
) -> np.ndarray:
    """Per-vertex visit rates over repeated uniform-start walks.

    Walks of ``walk_hops`` steps (default: the overlay segment length)
    start at uniform random vertices until ``total_hops`` hop positions
    have been recorded; the start vertices themselves are not counted.
    The returned rates sum to 1.
    """
    if total_hops < 1:
        raise ValueError("total_hops must be >= 1")
    if walk_hops is None:
        walk_hops = segment_length(o)
    if walk_hops < 1:
        raise ValueError("walk_hops must be >= 1")
    rng = np.random.default_rng((seed, 3))
    counts = np.zeros(o.n, dtype=np.int64)
    adj = o._adj_ids
    done = 0
    while done < total_hops:
        u = int(rng.integers(o.n))
        xs = rng.random(min(walk_hops, total_hops - done))
        for x in xs:
            nbrs = adj[u]
            u = int(nbrs[int(x * len(nbrs))])
            counts[u] += 1
        done += len(xs)
    return counts / counts.sum()


def position_distribution(
    o: OverlayGraph,
    steps: int,
    walks: int,
    seed: int = 0,
    start: int | None = None,
) -> np.ndarray:
    """Empirical distribution of the walk position after exactly ``steps`` hops.

    Starts at ``start`` (or a uniform random vertex per walk when None).
    """
    if steps < 1 or walks < 1:
        raise ValueError("steps and walks must be >= 1")
    rng = np.random.default_rng((seed, 3))
    counts = np.zeros(o.n, dtype=np.int64)
    adj = o._adj_ids
    for _ in range(walks):
        u = int(rng.integers(o.n)) if start is None else start
        xs = rng.random(steps)
        for x in xs:
            nbrs = adj[u]
            u = int(nbrs[int(x * len(nbrs))])
        counts[u] += 1
    return counts / walks
