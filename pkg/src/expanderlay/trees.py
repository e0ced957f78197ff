"""Random spanning trees via weighted walks, and overlays built by unioning them.

A tree is sampled by walking the base graph: from u the walk moves to
neighbor v with probability w(u, v) / w(u), and the first entering edge of
each vertex joins the tree. Sampled trees appear with probability
proportional to the product of their edge weights, which is what the
determinant-based statistics in :mod:`expanderlay.graph` describe.
"""

from __future__ import annotations

import json
import math
from collections import Counter, deque
from dataclasses import dataclass

import numpy as np

from .graph import (
    EdgeStatistics,
    GraphError,
    NotConnectedError,
    ParseError,
    WeightedGraph,
    edge_statistics,
)

__all__ = [
    "WalkTimeoutError",
    "SpanningTree",
    "OverlayGraph",
    "random_spanning_tree",
    "build_overlay",
    "overlay_to_text",
    "overlay_from_text",
    "write_overlay",
    "read_overlay",
]

# Hard backstop for a single tree walk; ordinary cover times are far below it.
WALK_STEP_FACTOR = 10_000

WEIGHT_MODES = ("plain", "resistance-scaled")


class WalkTimeoutError(RuntimeError):
    """A cover walk exceeded its safety cap without visiting every vertex."""


@dataclass(frozen=True)
class SpanningTree:
    """One sampled spanning tree: canonical (u, v, w) edges, start vertex, steps used."""

    edges: tuple[tuple[int, int, float], ...]
    root: int
    steps: int

    @property
    def edge_count(self) -> int:
        return len(self.edges)


def _walk_step_cap(n: int) -> int:
    return max(1, int(WALK_STEP_FACTOR * n * max(math.log(n), 1.0)))


def _sample_tree(g: WeightedGraph, rng) -> SpanningTree:
    """First-entry tree of a weighted walk driven by ``rng`` (no validation)."""
    start = int(rng.integers(g.n))
    visited = bytearray(g.n)
    visited[start] = 1
    remaining = g.n - 1
    tree = []
    cap = _walk_step_cap(g.n)
    steps = 0
    u = start
    buf = rng.random(1024)
    bi = 0
    adj_ids = g._adj_ids
    cumw = g._adj_cumw
    while remaining:
        if steps >= cap:
            raise WalkTimeoutError(
                f"tree walk exceeded {cap} steps with {remaining} vertices unvisited; "
                "extreme weight ratios can make cover times pathological"
            )
        if bi == len(buf):
            buf = rng.random(4096)
            bi = 0
        r = buf[bi] * cumw[u][-1]
        bi += 1
        idx = int(np.searchsorted(cumw[u], r, side="right"))
        if idx >= len(adj_ids[u]):
            idx = len(adj_ids[u]) - 1
        v = int(adj_ids[u][idx])
        steps += 1
        if not visited[v]:
            visited[v] = 1
            remaining -= 1
            a, b = (u, v) if u < v else (v, u)
            tree.append((a, b, g.weight(a, b)))
        u = v
    tree.sort()
    return SpanningTree(edges=tuple(tree), root=start, steps=steps)


def random_spanning_tree(g: WeightedGraph, seed) -> SpanningTree:
    """Sample one spanning tree by a weighted first-entry walk.

    ``seed`` may be an int or a sequence of ints; identical (graph, seed)
    pairs yield identical trees. Raises :class:`WalkTimeoutError` if the
    walk somehow fails to cover the graph within 10^4 * n * log(n) steps.
    """
    if not g.is_connected:
        raise NotConnectedError("spanning tree walk requires a connected graph")
    if g.n < 2:
        raise GraphError("degenerate graph: need at least 2 vertices")
    return _sample_tree(g, np.random.default_rng(seed))


class OverlayGraph:
    """Union of spanning trees over a base graph, with per-edge multiplicity.

    ``weight_mode`` controls overlay edge weights:

    * ``plain``: the base weight w(e),
    * ``resistance-scaled``: multiplicity * w(e) / (k * p_e), where p_e is
      the tree-inclusion probability of e in the base graph. The expected
      overlay weight of every edge then equals its base weight, which is
      what makes the overlay a spectral approximation candidate.

    Edges are canonical (u, v, weight, multiplicity) tuples. The overlay
    must be connected and span every base vertex.
    """

    __slots__ = (
        "base", "k", "seed", "weight_mode", "edges", "n", "m",
        "_adj_ids", "_adj_w", "_adj_cumw", "_index",
        "_eu", "_ev", "_ew", "_bfs_cache", "_as_graph",
    )

    def __init__(self, base: WeightedGraph, edges, k: int, seed, weight_mode: str):
        if weight_mode not in WEIGHT_MODES:
            raise GraphError(f"unknown weight mode {weight_mode!r}")
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise GraphError("tree count k must be a nonnegative integer")
        canon = []
        seen = set()
        for u, v, w, mult in edges:
            u, v, w, mult = int(u), int(v), float(w), int(mult)
            if u > v:
                u, v = v, u
            if not base.has_edge(u, v):
                raise GraphError(f"overlay edge ({u}, {v}) is not a base edge")
            if (u, v) in seen:
                raise GraphError(f"duplicate overlay edge ({u}, {v})")
            if not (w > 0) or not math.isfinite(w):
                raise GraphError(f"non-positive weight on overlay edge ({u}, {v})")
            if mult < 1:
                raise GraphError(f"multiplicity must be >= 1 on edge ({u}, {v})")
            seen.add((u, v))
            canon.append((u, v, w, mult))
        canon.sort()

        self.base = base
        self.k = int(k)
        self.seed = seed
        self.weight_mode = weight_mode
        self.edges: tuple[tuple[int, int, float, int], ...] = tuple(canon)
        self.n = base.n
        self.m = len(canon)
        self._index = {(u, v): i for i, (u, v, _, _) in enumerate(canon)}
        self._eu = np.fromiter((e[0] for e in canon), dtype=np.intp, count=self.m)
        self._ev = np.fromiter((e[1] for e in canon), dtype=np.intp, count=self.m)
        self._ew = np.fromiter((e[2] for e in canon), dtype=float, count=self.m)

        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for u, v, w, _ in canon:
            adj[u].append((v, w))
            adj[v].append((u, w))
        self._adj_ids = [np.array([v for v, _ in a], dtype=np.intp) for a in adj]
        self._adj_w = [np.array([w for _, w in a], dtype=float) for a in adj]
        self._adj_cumw = [np.cumsum(a) for a in self._adj_w]
        self._bfs_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._as_graph = None

        if not self._spans_connected():
            raise GraphError("overlay must be connected and span every vertex")

    def _spans_connected(self) -> bool:
        if self.n == 1:
            return True
        seen = bytearray(self.n)
        seen[0] = 1
        queue = deque([0])
        count = 1
        while queue:
            u = queue.popleft()
            for v in self._adj_ids[u]:
                v = int(v)
                if not seen[v]:
                    seen[v] = 1
                    count += 1
                    queue.append(v)
        return count == self.n

    # -- accessors -----------------------------------------------------------

    def neighbors(self, u: int) -> np.ndarray:
        return self._adj_ids[u]

    def degree(self, u: int) -> int:
        return len(self._adj_ids[u])

    def max_degree(self) -> int:
        return max(len(ids) for ids in self._adj_ids)

    def average_degree(self) -> float:
        return 2.0 * self.m / self.n

    @property
    def distinct_edge_count(self) -> int:
        return self.m

    def multiplicity(self, u: int, v: int) -> int:
        if u > v:
            u, v = v, u
        i = self._index.get((u, v))
        return 0 if i is None else self.edges[i][3]

    def weight(self, u: int, v: int) -> float:
        if u > v:
            u, v = v, u
        i = self._index.get((u, v))
        if i is None:
            raise GraphError(f"no overlay edge ({u}, {v})")
        return float(self._ew[i])

    def has_edge(self, u: int, v: int) -> bool:
        if u > v:
            u, v = v, u
        return (u, v) in self._index

    def laplacian(self) -> np.ndarray:
        L = np.zeros((self.n, self.n))
        for u, v, w, _ in self.edges:
            L[u, u] += w
            L[v, v] += w
            L[u, v] -= w
            L[v, u] -= w
        return L

    def quadratic_form(self, x: np.ndarray) -> float:
        dx = x[self._eu] - x[self._ev]
        return float(self._ew @ (dx * dx))

    def as_weighted_graph(self) -> WeightedGraph:
        """The overlay as a standalone graph carrying the overlay weights."""
        if self._as_graph is None:
            self._as_graph = WeightedGraph(
                self.n, [(u, v, w) for u, v, w, _ in self.edges]
            )
        return self._as_graph

    # -- shortest paths --------------------------------------------------------

    def _bfs_to(self, target: int) -> tuple[np.ndarray, np.ndarray]:
        cached = self._bfs_cache.get(target)
        if cached is not None:
            return cached
        dist = np.full(self.n, -1, dtype=np.int64)
        parent = np.full(self.n, -1, dtype=np.int64)
        dist[target] = 0
        queue = deque([target])
        while queue:
            u = queue.popleft()
            for v in self._adj_ids[u]:
                v = int(v)
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    parent[v] = u
                    queue.append(v)
        self._bfs_cache[target] = (dist, parent)
        return dist, parent

    def shortest_path(self, source: int, target: int) -> tuple[int, ...]:
        """A shortest hop-count path, deterministic tie-break by BFS order."""
        if not (0 <= source < self.n and 0 <= target < self.n):
            raise GraphError("path endpoints out of range")
        dist, parent = self._bfs_to(target)
        if dist[source] < 0:
            raise GraphError(f"no path from {source} to {target}")
        path = [source]
        u = source
        while u != target:
            u = int(parent[u])
            path.append(u)
        return tuple(path)

    @classmethod
    def full(cls, base: WeightedGraph) -> "OverlayGraph":
        """Synthetic overlay equal to the base graph itself (k=0 marks it
        as not built from trees); handy as a reference in checks and tests."""
        return cls(
            base,
            [(u, v, w, 1) for u, v, w in base.edges],
            k=0,
            seed=None,
            weight_mode="plain",
        )

    def __repr__(self) -> str:
        return (
            f"OverlayGraph(n={self.n}, distinct_edges={self.m}, k={self.k}, "
            f"mode={self.weight_mode!r})"
        )


def _overlay_from_counts(
    g: WeightedGraph,
    counts: Counter,
    k: int,
    seed,
    weight_mode: str,
    stats: EdgeStatistics | None = None,
) -> OverlayGraph:
    """Assemble an OverlayGraph from edge multiplicities of k unioned trees."""
    if weight_mode == "resistance-scaled":
        if stats is None:
            stats = edge_statistics(g)
        lookup = {e: float(p) for e, p in zip(stats.edges, stats.probability)}
        edges = []
        for (u, v), mult in counts.items():
            p = lookup[(u, v)]
            if p <= 0:
                raise GraphError(f"vanishing inclusion probability on edge ({u}, {v})")
            edges.append((u, v, mult * g.weight(u, v) / (k * p), mult))
    else:
        edges = [(u, v, g.weight(u, v), mult) for (u, v), mult in counts.items()]
    return OverlayGraph(g, edges, k=k, seed=seed, weight_mode=weight_mode)


def build_overlay(
    g: WeightedGraph,
    k: int,
    seed: int = 0,
    weight_mode: str = "plain",
    stats: EdgeStatistics | None = None,
) -> OverlayGraph:
    """Union k independently sampled spanning trees into an overlay.

    Tree i is seeded from (seed, 0, i), so the result is a pure function of
    (graph, k, seed, weight_mode). ``stats`` may pass precomputed edge
    statistics to avoid recomputation in resistance-scaled mode.
    """
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise GraphError("tree count k must be a positive integer")
    if weight_mode not in WEIGHT_MODES:
        raise GraphError(f"unknown weight mode {weight_mode!r}")
    counts: Counter = Counter()
    for i in range(k):
        tree = random_spanning_tree(g, (seed, 0, i))
        counts.update((u, v) for u, v, _ in tree.edges)
    return _overlay_from_counts(g, counts, int(k), int(seed), weight_mode, stats)


# -- serialization ------------------------------------------------------------

_HEADER_PREFIX = "# overlay "


def overlay_to_text(o: OverlayGraph) -> str:
    """Serialize as a JSON header line plus 'u v w m' edge lines.

    Deterministic: identical overlays produce identical bytes.
    """
    header = {
        "base_digest": o.base.digest(),
        "k": o.k,
        "mode": o.weight_mode,
        "seed": o.seed,
    }
    lines = [_HEADER_PREFIX + json.dumps(header, sort_keys=True)]
    lines.extend(f"{u} {v} {w!r} {mult}" for u, v, w, mult in o.edges)
    return "\n".join(lines) + "\n"


def overlay_from_text(text: str, base: WeightedGraph) -> OverlayGraph:
    """Parse overlay text written by :func:`overlay_to_text`.

    The header's base digest must match ``base``; a mismatch means the
    overlay was built for a different graph and is rejected.
    """
    header = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.startswith(_HEADER_PREFIX):
            if header is not None:
                raise ParseError(f"second overlay header at line {lineno}")
            try:
                header = json.loads(raw[len(_HEADER_PREFIX):])
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad overlay header at line {lineno}: {exc}") from None
            continue
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ParseError(f"malformed line {lineno}: expected 'u v w m'")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2])
            mult = int(parts[3])
        except ValueError:
            raise ParseError(f"malformed line {lineno}: expected 'u v w m'") from None
        edges.append((u, v, w, mult))
    if header is None:
        raise ParseError("missing overlay header line")
    for key in ("base_digest", "k", "mode", "seed"):
        if key not in header:
            raise ParseError(f"overlay header missing {key!r}")
    if header["base_digest"] != base.digest():
        raise GraphError(
            "overlay was built for a different base graph (digest mismatch)"
        )
    return OverlayGraph(
        base, edges, k=int(header["k"]), seed=header["seed"], weight_mode=header["mode"]
    )


def write_overlay(o: OverlayGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(overlay_to_text(o))


def read_overlay(path, base: WeightedGraph) -> OverlayGraph:
    with open(path) as fh:
        return overlay_from_text(fh.read(), base)
