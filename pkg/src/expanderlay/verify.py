"""Overlay quality checks: cover walks, spectral and cut approximation,
and negative correlation of tree edges.

Every check returns a report dataclass that is a deterministic function of
its inputs and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.linalg

from .graph import (
    GraphError,
    NotConnectedError,
    SizeCapError,
    WeightedGraph,
    _neighbor_bitmasks,
    enumerate_spanning_trees,
)
from .trees import OverlayGraph, _sample_tree

__all__ = [
    "CoverReport",
    "SpectralReport",
    "CutReport",
    "CorrelationReport",
    "mixing_cover_test",
    "parallel_cover_test",
    "spectral_approximation_check",
    "cut_approximation_check",
    "negative_correlation_test",
]


# -- cover walks ---------------------------------------------------------------


@dataclass(frozen=True)
class CoverReport:
    """Outcome of a cover-walk test.

    ``walk_length`` is the number of steps actually taken in single-walk
    modes, or the per-walk length in parallel mode; ``walks`` holds
    (start, newly_visited) pairs in parallel mode.
    """

    success: bool
    visited_count: int
    n: int
    walk_length: int
    length_cap: int
    mode: str
    start: int | None = None
    walks: tuple[tuple[int, int], ...] | None = None


def _cover_cap(n: int, cap_factor: float) -> int:
    return int(cap_factor * n * math.log(n)) if n > 1 else 0


def mixing_cover_test(
    o: OverlayGraph,
    seed: int = 0,
    cap_factor: float = 10.0,
    weighted: bool = False,
    accumulate_neighbors: bool = False,
) -> CoverReport:
    """Does a single random walk cover the overlay within cap_factor * n * ln n steps?

    An overlay that mixes like an expander covers within O(n log n) steps,
    so it passes comfortably; chain-like topologies need Theta(n^2) steps
    and run into the cap. By default the walk moves from its current vertex
    to a uniform neighbor (``weighted=True`` draws proportionally to
    overlay weights). ``accumulate_neighbors=True`` selects instead a
    uniform element of the accumulated neighbor set of everything visited
    so far, mirroring a batched variant of the same test.
    """
    if cap_factor <= 0:
        raise ValueError("cap_factor must be positive")
    if weighted and accumulate_neighbors:
        raise ValueError("accumulate_neighbors mode is defined for uniform choice only")
    n = o.n
    mode = "accumulate" if accumulate_neighbors else ("weighted" if weighted else "single")
    rng = np.random.default_rng(seed)
    if n == 1:
        return CoverReport(True, 1, 1, 0, 0, mode, start=0)
    cap = _cover_cap(n, cap_factor)
    start = int(rng.integers(n))
    visited = bytearray(n)
    visited[start] = 1
    count = 1
    steps = 0
    adj = o._adj_ids
    cumw = o._adj_cumw
    buf = rng.random(1024)
    bi = 0

    if accumulate_neighbors:
        cand: list[int] = []
        in_cand = bytearray(n)

        def absorb(v: int) -> None:
            for x in adj[v]:
                x = int(x)
                if not in_cand[x]:
                    in_cand[x] = 1
                    cand.append(x)

        absorb(start)
        while count < n and steps < cap:
            if bi == len(buf):
                buf = rng.random(4096)
                bi = 0
            v = cand[int(buf[bi] * len(cand))]
            bi += 1
            steps += 1
            if not visited[v]:
                visited[v] = 1
                count += 1
                absorb(v)
    else:
        u = start
        while count < n and steps < cap:
            if bi == len(buf):
                buf = rng.random(4096)
                bi = 0
            x = buf[bi]
            bi += 1
            if weighted:
                r = x * cumw[u][-1]
                idx = int(np.searchsorted(cumw[u], r, side="right"))
                if idx >= len(adj[u]):
                    idx = len(adj[u]) - 1
            else:
                idx = int(x * len(adj[u]))
            v = int(adj[u][idx])
            steps += 1
            if not visited[v]:
                visited[v] = 1
                count += 1
            u = v

    return CoverReport(
        success=count == n,
        visited_count=count,
        n=n,
        walk_length=steps,
        length_cap=cap,
        mode=mode,
        start=start,
    )


def parallel_cover_test(
    o: OverlayGraph,
    walk_count: int | None = None,
    walk_length: int | None = None,
    seed: int = 0,
) -> CoverReport:
    """Do many short walks jointly cover the overlay?

    Defaults: 4n walks of ceil(4 ln n) steps, the parallel counterpart of
    :func:`mixing_cover_test` (linear walk count, logarithmic length).
    """
    n = o.n
    if walk_count is None:
        walk_count = 4 * n
    if walk_length is None:
        walk_length = max(1, math.ceil(4 * math.log(n))) if n > 1 else 1
    if walk_count < 1 or walk_length < 1:
        raise ValueError("walk_count and walk_length must be positive")
    rng = np.random.default_rng(seed)
    visited = bytearray(n)
    count = 0
    detail = []
    adj = o._adj_ids
    starts = rng.integers(n, size=walk_count)
    for s in starts:
        u = int(s)
        new = 0
        if not visited[u]:
            visited[u] = 1
            count += 1
            new += 1
        buf = rng.random(walk_length)
        for x in buf:
            u = int(adj[u][int(x * len(adj[u]))])
            if not visited[u]:
                visited[u] = 1
                count += 1
                new += 1
        detail.append((int(s), new))
        if count == n:
            break
    return CoverReport(
        success=count == n,
        visited_count=count,
        n=n,
        walk_length=walk_length,
        length_cap=walk_length,
        mode="parallel",
        walks=tuple(detail),
    )


# -- spectral approximation ------------------------------------------------------


@dataclass(frozen=True)
class SpectralReport:
    """Observed Rayleigh-quotient ratios x^T L_overlay x / x^T L_base x.

    ``eigen_min``/``eigen_max`` are the exact generalized-eigenvalue
    extremes over the space orthogonal to the all-ones vector, computed
    only for small graphs. ``plain_mode`` flags that the overlay does not
    carry resistance-scaled weights, in which case ratios near 1 are not
    expected in general.
    """

    passed: bool
    epsilon: float
    ratio_min: float
    ratio_max: float
    eigen_min: float | None
    eigen_max: float | None
    probes: int
    skipped: int
    plain_mode: bool
    seed: int


def spectral_approximation_check(
    g: WeightedGraph,
    o: OverlayGraph,
    epsilon: float,
    probes: int = 200,
    seed: int = 0,
    eigen_cap: int = 64,
) -> SpectralReport:
    """Check (1 - eps) x^T L x <= x^T L' x <= (1 + eps) x^T L x on probe vectors.

    Probes are random unit vectors orthogonal to the all-ones vector. For
    n <= ``eigen_cap`` the exact extreme generalized eigenvalues are also
    computed and included in the pass decision. ``epsilon`` must lie in
    [1/sqrt(n), 1], the range in which the approximation guarantee is
    meaningful.
    """
    n = g.n
    if o.n != n:
        raise GraphError("overlay and base graph sizes differ")
    if n < 2:
        raise GraphError("spectral check needs at least 2 vertices")
    if not g.is_connected:
        raise NotConnectedError("spectral check requires a connected base graph")
    lo = 1.0 / math.sqrt(n)
    if not (lo <= epsilon <= 1.0):
        raise ValueError(
            f"epsilon must lie in [1/sqrt(n), 1] = [{lo:.6f}, 1], got {epsilon}"
        )
    if probes < 1:
        raise ValueError("need at least one probe vector")

    rng = np.random.default_rng(seed)
    ratios = []
    skipped = 0
    for _ in range(probes):
        x = rng.normal(size=n)
        x -= x.mean()
        nrm = np.linalg.norm(x)
        if nrm < 1e-12:
            skipped += 1
            continue
        x /= nrm
        den = g.quadratic_form(x)
        if den < 1e-12:
            skipped += 1
            continue
        ratios.append(o.quadratic_form(x) / den)

    eigen_min = eigen_max = None
    if n <= eigen_cap:
        # orthonormal basis of the complement of span{1}
        basis = np.eye(n)[:, 1:] - 1.0 / n
        q, _ = np.linalg.qr(basis)
        a = q.T @ o.laplacian() @ q
        b = q.T @ g.laplacian() @ q
        vals = scipy.linalg.eigh(a, b, eigvals_only=True)
        eigen_min, eigen_max = float(vals[0]), float(vals[-1])

    observed = list(ratios)
    if eigen_min is not None:
        observed.extend([eigen_min, eigen_max])
    passed = bool(
        observed
        and min(observed) >= 1.0 - epsilon
        and max(observed) <= 1.0 + epsilon
    )
    return SpectralReport(
        passed=passed,
        epsilon=float(epsilon),
        ratio_min=float(min(ratios)) if ratios else math.nan,
        ratio_max=float(max(ratios)) if ratios else math.nan,
        eigen_min=eigen_min,
        eigen_max=eigen_max,
        probes=len(ratios),
        skipped=skipped,
        plain_mode=o.weight_mode != "resistance-scaled",
        seed=seed,
    )


# -- cut approximation ------------------------------------------------------------


@dataclass(frozen=True)
class CutReport:
    """Worst ratio of overlay cut size (scaled by alpha ln n) to base cut size."""

    passed: bool
    min_ratio: float
    witness: tuple[int, ...]
    witness_overlay_cut: int
    witness_base_cut: int
    alpha: float
    subsets_checked: int


def cut_approximation_check(
    g: WeightedGraph, o: OverlayGraph, alpha: float, max_n: int = 20
) -> CutReport:
    """Exhaustively check |overlay cut| >= |base cut| / (alpha ln n) on all cuts.

    Cut sizes count distinct crossing edges. Enumerates every subset with
    1 <= |S| <= n/2 (boundaries are symmetric under complement), so the
    graph size is capped. Deterministic; the witness is the subset
    attaining the minimum ratio |overlay cut| * alpha * ln n / |base cut|.
    """
    n = g.n
    if o.n != n:
        raise GraphError("overlay and base graph sizes differ")
    if n < 2:
        raise GraphError("cut check needs at least 2 vertices")
    if n > max_n:
        raise SizeCapError(
            f"cut check enumerates all cuts; capped at {max_n} vertices (graph has {n})"
        )
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not g.is_connected:
        raise NotConnectedError("cut check requires a connected base graph")

    masks_g = _neighbor_bitmasks(g)
    masks_o = _neighbor_bitmasks(o)
    full = (1 << n) - 1
    scale = alpha * math.log(n)
    best = math.inf
    best_combo: tuple[int, ...] = ()
    best_cuts = (0, 0)
    checked = 0
    for size in range(1, n // 2 + 1):
        for combo in combinations(range(n), size):
            smask = 0
            for u in combo:
                smask |= 1 << u
            outside = full ^ smask
            cut_g = 0
            cut_o = 0
            for u in combo:
                cut_g += (masks_g[u] & outside).bit_count()
                cut_o += (masks_o[u] & outside).bit_count()
            checked += 1
            ratio = cut_o * scale / cut_g
            if ratio < best:
                best = ratio
                best_combo = combo
                best_cuts = (cut_o, cut_g)
    return CutReport(
        passed=best >= 1.0,
        min_ratio=float(best),
        witness=best_combo,
        witness_overlay_cut=best_cuts[0],
        witness_base_cut=best_cuts[1],
        alpha=float(alpha),
        subsets_checked=checked,
    )


# -- negative correlation -----------------------------------------------------------


@dataclass(frozen=True)
class CorrelationReport:
    """Exact (and optionally sampled) check that tree edges are negatively correlated.

    For every edge pair, P[both in tree] <= P[e in tree] * P[f in tree].
    ``max_exact_violation`` is the largest value of joint - product over
    all pairs (nonpositive up to numerical tolerance when the property
    holds); the empirical counterpart uses sampled trees.
    """

    passed: bool
    max_exact_violation: float
    worst_pair: tuple[tuple[int, int], tuple[int, int]] | None
    max_empirical_violation: float | None
    samples: int
    pair_count: int
    tolerance: float


def negative_correlation_test(
    g: WeightedGraph, samples: int = 10_000, seed: int = 0, tolerance: float = 1e-9
) -> CorrelationReport:
    """Exhaustive pairwise-correlation check on a small graph.

    Enumerates all spanning trees to get exact marginal and joint edge
    inclusion probabilities (weighted by tree weight), then optionally
    cross-checks with ``samples`` walk-sampled trees. Exponential in graph
    size; intended for n <= 8.
    """
    if not g.is_connected:
        raise NotConnectedError("correlation test requires a connected graph")
    marg = np.zeros(g.m)
    joint: dict[tuple[int, int], float] = {}
    kappa = 0.0
    index = {(u, v): i for i, (u, v, _) in enumerate(g.edges)}
    for tree in enumerate_spanning_trees(g):
        wt = 1.0
        for _, _, w in tree:
            wt *= w
        kappa += wt
        ids = [index[(u, v)] for u, v, _ in tree]
        for a, i in enumerate(ids):
            marg[i] += wt
            for j in ids[a + 1 :]:
                key = (i, j) if i < j else (j, i)
                joint[key] = joint.get(key, 0.0) + wt
    if kappa <= 0:
        raise GraphError("graph has no spanning trees")
    marg /= kappa

    worst = -math.inf
    worst_pair = None
    pair_count = 0
    for i in range(g.m):
        for j in range(i + 1, g.m):
            pair_count += 1
            pj = joint.get((i, j), 0.0) / kappa
            violation = pj - marg[i] * marg[j]
            if violation > worst:
                worst = violation
                worst_pair = (g.edges[i][:2], g.edges[j][:2])
    if worst_pair is None:
        worst = 0.0

    max_emp = None
    if samples > 0:
        rng = np.random.default_rng((seed, 1))
        emp_marg = np.zeros(g.m)
        emp_joint: dict[tuple[int, int], int] = {}
        for _ in range(samples):
            tree = _sample_tree(g, rng)
            ids = [index[(u, v)] for u, v, _ in tree.edges]
            for a, i in enumerate(ids):
                emp_marg[i] += 1
                for j in ids[a + 1 :]:
                    key = (i, j) if i < j else (j, i)
                    emp_joint[key] = emp_joint.get(key, 0) + 1
        emp_marg /= samples
        max_emp = -math.inf
        for i in range(g.m):
            for j in range(i + 1, g.m):
                pj = emp_joint.get((i, j), 0) / samples
                max_emp = max(max_emp, pj - emp_marg[i] * emp_marg[j])
        max_emp = float(max_emp) if pair_count else 0.0

    return CorrelationReport(
        passed=worst <= tolerance,
        max_exact_violation=float(worst),
        worst_pair=worst_pair,
        max_empirical_violation=max_emp,
        samples=samples,
        pair_count=pair_count,
        tolerance=tolerance,
    )
