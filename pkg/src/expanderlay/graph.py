"""Weighted undirected graphs: parsing, cuts, expansion, spanning-tree counts.

Conventions used across the package:

* vertices are integers 0..n-1,
* edges are undirected pairs stored canonically as (u, v, w) with u < v and w > 0,
* no self-loops, no duplicate edges,
* the weighted degree w(u) is the sum of the weights of edges incident to u.
"""

from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "GraphError",
    "ParseError",
    "NotConnectedError",
    "SizeCapError",
    "NumericalError",
    "WeightedGraph",
    "CutSet",
    "ExpansionResult",
    "EdgeStatistics",
    "parse_graph",
    "edge_boundary",
    "expansion_bruteforce",
    "spanning_tree_total_weight",
    "edge_statistics",
    "enumerate_spanning_trees",
]


class GraphError(ValueError):
    """Invalid graph data or an operation applied to an unsuitable graph."""


class ParseError(GraphError):
    """Malformed edge-list text; the message names the offending line."""


class NotConnectedError(GraphError):
    """Operation requires a connected graph."""


class SizeCapError(GraphError):
    """Brute-force operation refused because the graph exceeds its size cap."""


class NumericalError(RuntimeError):
    """A matrix factorization failed on input that should be well conditioned."""


class WeightedGraph:
    """Immutable weighted undirected graph.

    Parameters
    ----------
    n : int
        Number of vertices; valid ids are 0..n-1.
    edges : iterable of (u, v, w)
        Undirected weighted edges; endpoint order does not matter.

    Notes
    -----
    Instances are treated as immutable: connectivity and adjacency are
    computed once at construction and cached. Do not mutate the arrays
    returned by :meth:`neighbors`.
    """

    __slots__ = (
        "n", "edges", "m", "total_weight", "is_connected",
        "_adj_ids", "_adj_w", "_adj_cumw", "_index",
        "_eu", "_ev", "_ew", "_strength", "_laplacian", "_digest",
    )

    def __init__(self, n: int, edges: Iterable[tuple[int, int, float]]):
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise GraphError("vertex count must be a positive integer")
        n = int(n)
        canon = []
        seen = set()
        for u, v, w in edges:
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"vertex id out of range on edge ({u}, {v})")
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if u > v:
                u, v = v, u
            if (u, v) in seen:
                raise GraphError(f"duplicate edge ({u}, {v})")
            if not math.isfinite(w):
                raise GraphError(f"non-finite weight on edge ({u}, {v})")
            if w <= 0:
                raise GraphError(f"non-positive weight on edge ({u}, {v})")
            seen.add((u, v))
            canon.append((u, v, w))
        canon.sort()

        self.n = n
        self.edges: tuple[tuple[int, int, float], ...] = tuple(canon)
        self.m = len(canon)
        self._index = {(u, v): i for i, (u, v, _) in enumerate(canon)}
        self._eu = np.fromiter((e[0] for e in canon), dtype=np.intp, count=self.m)
        self._ev = np.fromiter((e[1] for e in canon), dtype=np.intp, count=self.m)
        self._ew = np.fromiter((e[2] for e in canon), dtype=float, count=self.m)

        adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for u, v, w in canon:
            adj[u].append((v, w))
            adj[v].append((u, w))
        self._adj_ids = [np.array([v for v, _ in a], dtype=np.intp) for a in adj]
        self._adj_w = [np.array([w for _, w in a], dtype=float) for a in adj]
        self._adj_cumw = [np.cumsum(a) for a in self._adj_w]
        self._strength = np.array(
            [c[-1] if len(c) else 0.0 for c in self._adj_cumw], dtype=float
        )
        self.total_weight = float(self._ew.sum()) if self.m else 0.0
        self.is_connected = len(self.component(0)) == n
        self._laplacian = None
        self._digest = None

    # -- basic accessors ---------------------------------------------------

    def degree(self, u: int) -> int:
        """Number of neighbors of u."""
        return len(self._adj_ids[u])

    def weighted_degree(self, u: int) -> float:
        """w(u): total weight of edges incident to u."""
        return float(self._strength[u])

    def neighbors(self, u: int) -> np.ndarray:
        """Neighbor ids of u (read-only view)."""
        return self._adj_ids[u]

    def has_edge(self, u: int, v: int) -> bool:
        if u > v:
            u, v = v, u
        return (u, v) in self._index

    def weight(self, u: int, v: int) -> float:
        if u > v:
            u, v = v, u
        i = self._index.get((u, v))
        if i is None:
            raise GraphError(f"no edge ({u}, {v})")
        return float(self._ew[i])

    def max_degree(self) -> int:
        return max(len(ids) for ids in self._adj_ids)

    def average_degree(self) -> float:
        return 2.0 * self.m / self.n

    # -- connectivity ------------------------------------------------------

    def component(self, start: int) -> list[int]:
        """Vertices reachable from ``start`` (BFS order)."""
        seen = bytearray(self.n)
        seen[start] = 1
        order = [start]
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in self._adj_ids[u]:
                v = int(v)
                if not seen[v]:
                    seen[v] = 1
                    order.append(v)
                    queue.append(v)
        return order

    def components(self) -> list[list[int]]:
        """All connected components, smallest first."""
        remaining = set(range(self.n))
        comps = []
        while remaining:
            comp = self.component(min(remaining))
            comps.append(sorted(comp))
            remaining.difference_update(comp)
        comps.sort(key=len)
        return comps

    # -- matrices ----------------------------------------------------------

    def laplacian(self) -> np.ndarray:
        """Dense weighted Laplacian L = D - W (a fresh copy)."""
        if self._laplacian is None:
            L = np.zeros((self.n, self.n))
            for u, v, w in self.edges:
                L[u, u] += w
                L[v, v] += w
                L[u, v] -= w
                L[v, u] -= w
            self._laplacian = L
        return self._laplacian.copy()

    def quadratic_form(self, x: np.ndarray) -> float:
        """x^T L x evaluated edge-wise: sum of w * (x_u - x_v)^2."""
        dx = x[self._eu] - x[self._ev]
        return float(self._ew @ (dx * dx))

    def adjacency_matrix(self) -> np.ndarray:
        """Dense symmetric weighted adjacency matrix."""
        A = np.zeros((self.n, self.n))
        for u, v, w in self.edges:
            A[u, v] = w
            A[v, u] = w
        return A

    @classmethod
    def from_adjacency(cls, A, tol: float = 1e-8) -> "WeightedGraph":
        """Build a graph from a square symmetric nonnegative adjacency matrix."""
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise GraphError("adjacency matrix must be square")
        n = A.shape[0]
        if not np.allclose(A, A.T, atol=tol):
            raise GraphError("adjacency matrix must be symmetric")
        if np.any(A < -tol):
            raise GraphError("adjacency matrix must be nonnegative")
        if np.any(np.abs(np.diag(A)) > tol):
            raise GraphError("adjacency matrix must have a zero diagonal")
        iu, iv = np.nonzero(np.triu(A, 1) > tol)
        edges = [(int(u), int(v), float(A[u, v])) for u, v in zip(iu, iv)]
        return cls(n, edges)

    # -- serialization -----------------------------------------------------

    def to_text(self) -> str:
        """Canonical 'u v w' edge-list text, one edge per line."""
        return "".join(f"{u} {v} {w!r}\n" for u, v, w in self.edges)

    def digest(self) -> str:
        """SHA-256 over the canonical form, prefixed with the vertex count."""
        if self._digest is None:
            payload = f"n={self.n}\n" + self.to_text()
            self._digest = hashlib.sha256(payload.encode()).hexdigest()
        return self._digest

    def __repr__(self) -> str:
        return f"WeightedGraph(n={self.n}, m={self.m})"


def parse_graph(text: str) -> WeightedGraph:
    """Parse edge-list text: one 'u v w' edge per line, '#' starts a comment.

    The vertex count is max id + 1. Raises :class:`ParseError` with the
    1-based line number on malformed input.
    """
    edges = []
    first_line = {}
    max_id = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"malformed line {lineno}: expected 'u v w'")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2])
        except ValueError:
            raise ParseError(f"malformed line {lineno}: expected 'u v w'") from None
        if u < 0 or v < 0:
            raise ParseError(f"negative vertex id at line {lineno}")
        if u == v:
            raise ParseError(f"self-loop at line {lineno}")
        key = (min(u, v), max(u, v))
        if key in first_line:
            raise ParseError(
                f"duplicate edge at line {lineno} (first seen at line {first_line[key]})"
            )
        if math.isnan(w) or w <= 0:
            raise ParseError(f"non-positive weight at line {lineno}")
        if math.isinf(w):
            raise ParseError(f"non-finite weight at line {lineno}")
        first_line[key] = lineno
        edges.append((u, v, w))
        max_id = max(max_id, u, v)
    if not edges:
        raise ParseError("no edges found")
    return WeightedGraph(max_id + 1, edges)


# -- cuts and expansion ----------------------------------------------------


@dataclass(frozen=True)
class CutSet:
    """Edges crossing a vertex subset S, with |cut| and total crossing weight."""

    subset: tuple[int, ...]
    edges: tuple[tuple[int, int, float], ...]
    size: int
    weight: float


def edge_boundary(g: WeightedGraph, subset: Iterable[int]) -> CutSet:
    """Edges with exactly one endpoint in ``subset``.

    ``subset`` must be a nonempty proper subset of the vertices.
    """
    s = set()
    for x in subset:
        x = int(x)
        if not 0 <= x < g.n:
            raise GraphError(f"vertex id {x} out of range")
        s.add(x)
    if not s:
        raise GraphError("cut subset is empty")
    if len(s) >= g.n:
        raise GraphError("cut subset must be a proper subset of the vertices")
    crossing = []
    for u in sorted(s):
        ids = g._adj_ids[u]
        ws = g._adj_w[u]
        for v, w in zip(ids, ws):
            v = int(v)
            if v not in s:
                a, b = (u, v) if u < v else (v, u)
                crossing.append((a, b, float(w)))
    crossing.sort()
    return CutSet(
        subset=tuple(sorted(s)),
        edges=tuple(crossing),
        size=len(crossing),
        weight=float(sum(w for _, _, w in crossing)),
    )


@dataclass(frozen=True)
class ExpansionResult:
    """Minimum boundary-to-size ratio and a witness subset attaining it."""

    mode: str
    value: float
    witness: tuple[int, ...]


def _neighbor_bitmasks(g) -> list[int]:
    masks = [0] * g.n
    for u, v, *_ in g.edges:
        masks[u] |= 1 << v
        masks[v] |= 1 << u
    return masks


def expansion_bruteforce(
    g: WeightedGraph, mode: str = "edge", max_n: int = 20
) -> ExpansionResult:
    """Exact expansion by enumerating every subset S with 1 <= |S| <= n/2.

    ``mode='edge'`` minimizes |boundary edges| / |S| (edges are counted, not
    weighted); ``mode='vertex'`` minimizes |outside neighbors of S| / |S|.
    Exponential in n, so refused above ``max_n`` vertices. A disconnected
    graph has expansion 0 with a smallest component as witness.
    """
    if mode not in ("edge", "vertex"):
        raise ValueError(f"mode must be 'edge' or 'vertex', got {mode!r}")
    if g.n < 2:
        raise GraphError("expansion needs at least 2 vertices")
    if g.n > max_n:
        raise SizeCapError(
            f"brute-force expansion capped at {max_n} vertices (graph has {g.n})"
        )
    if not g.is_connected:
        return ExpansionResult(mode, 0.0, tuple(g.components()[0]))

    masks = _neighbor_bitmasks(g)
    full = (1 << g.n) - 1
    best = math.inf
    best_combo: tuple[int, ...] = ()
    for size in range(1, g.n // 2 + 1):
        for combo in combinations(range(g.n), size):
            smask = 0
            for u in combo:
                smask |= 1 << u
            outside = full ^ smask
            if mode == "edge":
                count = 0
                for u in combo:
                    count += (masks[u] & outside).bit_count()
            else:
                reach = 0
                for u in combo:
                    reach |= masks[u]
                count = (reach & outside).bit_count()
            ratio = count / size
            if ratio < best:
                best = ratio
                best_combo = combo
    return ExpansionResult(mode, best, best_combo)


# -- spanning-tree counts (Matrix-Tree) --------------------------------------


def _reduced_laplacian(g: WeightedGraph, excluded_edge=None) -> np.ndarray:
    """Weighted Laplacian with row/column 0 deleted, optionally minus one edge.

    Any deleted vertex gives the same determinant; 0 is used throughout.
    """
    L = g.laplacian()
    if excluded_edge is not None:
        u, v = int(excluded_edge[0]), int(excluded_edge[1])
        w = g.weight(u, v)
        L[u, u] -= w
        L[v, v] -= w
        L[u, v] += w
        L[v, u] += w
    return L[1:, 1:]


def _connected_without(g: WeightedGraph, excluded_edge=None) -> bool:
    if excluded_edge is None:
        return g.is_connected
    a, b = int(excluded_edge[0]), int(excluded_edge[1])
    if a > b:
        a, b = b, a
    seen = bytearray(g.n)
    seen[0] = 1
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for v in g._adj_ids[u]:
            v = int(v)
            lo, hi = (u, v) if u < v else (v, u)
            if (lo, hi) == (a, b):
                continue
            if not seen[v]:
                seen[v] = 1
                count += 1
                queue.append(v)
    return count == g.n


def _log_spanning_tree_weight(g: WeightedGraph, excluded_edge=None) -> float:
    """log of the total spanning-tree weight; -inf if disconnected.

    Uses a Cholesky factorization of the reduced Laplacian (symmetric
    positive definite exactly when the graph is connected), so the value
    stays representable even when the determinant itself overflows.
    """
    M = _reduced_laplacian(g, excluded_edge)
    try:
        c = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        if _connected_without(g, excluded_edge):
            cond = float(np.linalg.cond(M)) if M.size else math.inf
            raise NumericalError(
                f"factorization failed on a connected graph (condition ~{cond:.3e})"
            ) from None
        return -math.inf
    return 2.0 * float(np.log(np.diag(c)).sum())


def spanning_tree_total_weight(g: WeightedGraph, excluded_edge=None) -> float:
    """Sum over spanning trees of the product of edge weights.

    Equals the determinant of the reduced weighted Laplacian; for unit
    weights this is the spanning-tree count. With ``excluded_edge`` the
    count is taken over the graph without that edge (0.0 when removing it
    disconnects the graph). May overflow to inf for very large dense
    graphs; use :func:`edge_statistics` for ratio-based quantities.
    """
    if g.n < 2:
        raise GraphError("degenerate graph: spanning trees need at least 2 vertices")
    if not g.is_connected:
        return 0.0
    log_k = _log_spanning_tree_weight(g, excluded_edge)
    return math.exp(log_k)


@dataclass(frozen=True)
class EdgeStatistics:
    """Per-edge spanning-tree inclusion statistics of a connected graph.

    ``probability[i]`` is the chance that edge ``edges[i]`` appears in a
    random spanning tree drawn with probability proportional to the product
    of edge weights. ``conductance`` is the edge weight and ``resistance``
    the ratio probability / conductance.
    """

    edges: tuple[tuple[int, int], ...]
    probability: np.ndarray
    resistance: np.ndarray
    conductance: np.ndarray
    average_probability: float

    def edge_probability(self, u: int, v: int) -> float:
        if u > v:
            u, v = v, u
        return float(self.probability[self.edges.index((u, v))])


def edge_statistics(g: WeightedGraph) -> EdgeStatistics:
    """Tree-inclusion probability, resistance and conductance for every edge.

    p_e = 1 - kappa(G - e) / kappa(G), evaluated as a ratio of reduced
    Laplacian determinants in log space (one Cholesky factorization per
    edge, O(m n^3) overall: intended for small and medium graphs).
    """
    if g.n < 2:
        raise GraphError("degenerate graph: edge statistics need at least 2 vertices")
    if not g.is_connected:
        raise NotConnectedError("edge statistics require a connected graph")
    base = _log_spanning_tree_weight(g)
    p = np.empty(g.m)
    for i, (u, v, _) in enumerate(g.edges):
        off = _log_spanning_tree_weight(g, excluded_edge=(u, v))
        p[i] = -math.expm1(off - base)
    np.clip(p, 0.0, 1.0, out=p)
    conductance = g._ew.copy()
    resistance = p / conductance
    return EdgeStatistics(
        edges=tuple((u, v) for u, v, _ in g.edges),
        probability=p,
        resistance=resistance,
        conductance=conductance,
        average_probability=float(p.mean()),
    )


# -- exhaustive enumeration (oracle for small graphs) ------------------------


def _is_spanning_tree(edge_subset, n: int) -> bool:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v, _ in edge_subset:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return True


def enumerate_spanning_trees(
    g: WeightedGraph, combination_cap: int = 5_000_000
) -> Iterator[tuple[tuple[int, int, float], ...]]:
    """Yield every spanning tree as a tuple of canonical (u, v, w) edges.

    Exhaustive over all C(m, n-1) edge subsets, so only usable on small
    graphs; refuses when the subset count exceeds ``combination_cap``.
    """
    if g.n < 2:
        raise GraphError("degenerate graph: spanning trees need at least 2 vertices")
    total = math.comb(g.m, g.n - 1)
    if total > combination_cap:
        raise SizeCapError(
            f"enumeration would scan {total} edge subsets (cap {combination_cap})"
        )
    for combo in combinations(g.edges, g.n - 1):
        if _is_spanning_tree(combo, g.n):
            yield combo
