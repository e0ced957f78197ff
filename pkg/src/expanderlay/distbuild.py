"""Round-based overlay construction with a doubling tree budget.

Each round requests twice as many new trees as the previous one (1, 2, 4,
..., cumulative 1, 3, 7, ...), unions everything sampled so far and runs a
cover-walk verification on the union. Construction stops at the first
passing round or after ceil(log2 n) + 1 rounds.

Workers are logical tasks: tree generation is spread over a thread pool
and results are exchanged as futures. Because every tree is seeded by its
global index (seed, 0, i), the outcome is a pure function of
(graph, config, seed) no matter how many workers run.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .graph import GraphError, NotConnectedError, WeightedGraph, edge_statistics
from .trees import OverlayGraph, SpanningTree, _overlay_from_counts, random_spanning_tree
from .verify import CoverReport, mixing_cover_test, parallel_cover_test

__all__ = [
    "VerificationPolicy",
    "RoundResult",
    "BuildOrchestration",
    "worker_generate_trees",
    "orchestrate_build",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class VerificationPolicy:
    """How each round's union is judged.

    ``method`` is 'mixing' (single cover walk, the default) or 'parallel'
    (many short walks). Unset walk_count/walk_length fall back to the
    parallel test's own defaults.
    """

    method: str = "mixing"
    cap_factor: float = 10.0
    weighted: bool = False
    accumulate_neighbors: bool = False
    walk_count: int | None = None
    walk_length: int | None = None

    def run(self, o: OverlayGraph, seed) -> CoverReport:
        if self.method == "mixing":
            return mixing_cover_test(
                o,
                seed=seed,
                cap_factor=self.cap_factor,
                weighted=self.weighted,
                accumulate_neighbors=self.accumulate_neighbors,
            )
        if self.method == "parallel":
            return parallel_cover_test(
                o, walk_count=self.walk_count, walk_length=self.walk_length, seed=seed
            )
        raise ValueError(f"unknown verification method {self.method!r}")


@dataclass(frozen=True)
class RoundResult:
    round_index: int
    requested: int
    total_trees: int
    distinct_edges: int
    verification: CoverReport
    passed: bool


@dataclass(frozen=True)
class BuildOrchestration:
    """Full record of a doubling construction run."""

    succeeded: bool
    rounds: tuple[RoundResult, ...]
    overlay: OverlayGraph = field(repr=False)
    total_trees: int
    worker_count: int
    seed: int
    round_cap: int
    weight_mode: str


def worker_generate_trees(g: WeightedGraph, count: int, seed_stream) -> list[SpanningTree]:
    """Generate ``count`` trees, one per entry of ``seed_stream``.

    ``seed_stream`` is a sequence of per-tree seeds (ints or int tuples);
    trees are independent across the stream and reproducible from it.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if len(seed_stream) < count:
        raise ValueError("seed_stream shorter than requested tree count")
    return [random_spanning_tree(g, seed_stream[i]) for i in range(count)]


def _tree_seed(seed: int, index: int) -> tuple[int, int, int]:
    return (seed, 0, index)


def orchestrate_build(
    g: WeightedGraph,
    seed: int = 0,
    workers: int = 1,
    weight_mode: str = "plain",
    policy: VerificationPolicy | None = None,
    round_cap: int | None = None,
) -> BuildOrchestration:
    """Grow an overlay by doubling rounds until its verification passes.

    Returns a :class:`BuildOrchestration` whose ``overlay`` is the last
    round's union; ``succeeded`` is False when the round cap was exhausted
    without a passing verification (the overlay is still returned, flagged
    failed). With tree seeds tied to global indices, the result equals
    ``build_overlay(g, total_trees, seed, weight_mode)`` regardless of
    ``workers``.
    """
    if not g.is_connected:
        raise NotConnectedError("graph not connected")
    if g.n < 2:
        raise GraphError("degenerate graph: need at least 2 vertices")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if policy is None:
        policy = VerificationPolicy()
    if round_cap is None:
        round_cap = math.ceil(math.log2(g.n)) + 1
    if round_cap < 1:
        raise ValueError("round_cap must be >= 1")

    stats = edge_statistics(g) if weight_mode == "resistance-scaled" else None
    counts: Counter = Counter()
    rounds: list[RoundResult] = []
    total = 0
    overlay = None
    succeeded = False
    for round_index in range(1, round_cap + 1):
        requested = 2 ** (round_index - 1)
        indices = range(total, total + requested)
        chunks = [
            indices[j : j + math.ceil(requested / workers)]
            for j in range(0, requested, math.ceil(requested / workers))
        ]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    worker_generate_trees,
                    g,
                    len(chunk),
                    [_tree_seed(seed, i) for i in chunk],
                )
                for chunk in chunks
            ]
            batches = [f.result() for f in futures]
        for batch in batches:
            for tree in batch:
                counts.update((u, v) for u, v, _ in tree.edges)
        total += requested

        overlay = _overlay_from_counts(g, counts, total, seed, weight_mode, stats)
        report = policy.run(overlay, seed=(seed, 1, round_index))
        rounds.append(
            RoundResult(
                round_index=round_index,
                requested=requested,
                total_trees=total,
                distinct_edges=overlay.distinct_edge_count,
                verification=report,
                passed=report.success,
            )
        )
        log.info(
            "round %d: +%d trees (total %d, %d distinct edges), verification %s",
            round_index, requested, total, overlay.distinct_edge_count,
            "passed" if report.success else "failed",
        )
        if report.success:
            succeeded = True
            break

    return BuildOrchestration(
        succeeded=succeeded,
        rounds=tuple(rounds),
        overlay=overlay,
        total_trees=total,
        worker_count=workers,
        seed=seed,
        round_cap=round_cap,
        weight_mode=weight_mode,
    )
