"""scikit-learn style adapter: sparsify adjacency matrices by tree union.

Lets the overlay construction compose with sklearn pipelines and model
selection: ``fit`` calibrates the tree count on a reference graph (running
the doubling construction when k is unset), ``transform`` sparsifies any
same-shaped graph with the fitted count. Dense arrays and scipy sparse
matrices are both accepted; the output matches the input container type.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse
from sklearn.base import BaseEstimator, TransformerMixin

from .distbuild import VerificationPolicy, orchestrate_build
from .graph import WeightedGraph
from .trees import build_overlay

__all__ = ["ExpanderOverlaySparsifier", "check_adjacency"]


def check_adjacency(X) -> tuple[np.ndarray, bool]:
    """Validate a (sparse or dense) adjacency matrix; returns (dense, was_sparse)."""
    sparse = scipy.sparse.issparse(X)
    A = X.toarray() if sparse else np.asarray(X, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("adjacency matrix must be square")
    return A, sparse


def _overlay_adjacency(o) -> np.ndarray:
    A = np.zeros((o.n, o.n))
    for u, v, w, _ in o.edges:
        A[u, v] = w
        A[v, u] = w
    return A


class ExpanderOverlaySparsifier(BaseEstimator, TransformerMixin):
    """Sparsify a weighted graph by unioning random spanning trees.

    Parameters
    ----------
    k : int or None
        Number of trees to union. None runs the doubling construction on
        the fitted graph until its cover test passes and stores the
        resulting count as ``k_``.
    weight_mode : str
        "plain" keeps base weights; "resistance-scaled" reweights edges by
        multiplicity / (k * inclusion probability) so the overlay
        approximates the base Laplacian.
    seed : int
        Seeds every tree; identical inputs give identical outputs.
    cap_factor : float
        Cover-walk budget factor used when k is None.
    workers : int
        Worker tasks for the doubling construction (result is
        worker-count independent).

    Attributes
    ----------
    k_ : int
        Fitted tree count.
    overlay_ : OverlayGraph
        Overlay built on the fitted graph.
    n_features_in_ : int
        Vertex count of the fitted graph.
    """

    def __init__(self, k=None, weight_mode="plain", seed=0, cap_factor=10.0, workers=1):
        self.k = k
        self.weight_mode = weight_mode
        self.seed = seed
        self.cap_factor = cap_factor
        self.workers = workers

    def fit(self, X, y=None):
        A, _ = check_adjacency(X)
        g = WeightedGraph.from_adjacency(A)
        if not g.is_connected:
            raise ValueError("graph not connected")
        if self.k is None:
            result = orchestrate_build(
                g,
                seed=self.seed,
                workers=self.workers,
                weight_mode=self.weight_mode,
                policy=VerificationPolicy(cap_factor=self.cap_factor),
            )
            self.k_ = result.total_trees
            self.overlay_ = result.overlay
        else:
            self.overlay_ = build_overlay(g, self.k, seed=self.seed,
                                          weight_mode=self.weight_mode)
            self.k_ = int(self.k)
        self.n_features_in_ = g.n
        return self

    def transform(self, X):
        if not hasattr(self, "k_"):
            raise RuntimeError("fit the sparsifier before calling transform")
        A, sparse = check_adjacency(X)
        g = WeightedGraph.from_adjacency(A)
        if not g.is_connected:
            raise ValueError("graph not connected")
        o = build_overlay(g, self.k_, seed=self.seed, weight_mode=self.weight_mode)
        out = _overlay_adjacency(o)
        return scipy.sparse.csr_matrix(out) if sparse else out
