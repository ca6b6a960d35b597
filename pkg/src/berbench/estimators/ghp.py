"""Henze-Penrose divergence BER bounds from the Friedman-Rafsky MST statistic.

The divergence is the plug-in ``1 - R n / (2 n_A n_B)`` where ``R`` counts
minimum-spanning-tree edges joining points of different classes; it is
clamped to ``[0, 1]``. With empirical priors ``p`` and ``q`` and
``u = 4 p q D + (p - q)^2`` the bounds are::

    upper = 1/2 - u / 2
    lower = 1/2 - sqrt(u) / 2

These are the two-class GHP bounds written out directly, not a port of
any particular code base.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._base import BaseEstimator, BERMixin, check_labeled


@dataclass(frozen=True)
class GhpEstimate:
    lower: float
    upper: float
    mid: float
    cross_edges: int
    divergence: float


def euclidean_mst(points) -> tuple[np.ndarray, np.ndarray]:
    """Minimum spanning tree of the complete Euclidean graph (dense Prim, O(n^2)).

    Returns ``(edges, weights)``: an ``(n-1, 2)`` int array with each edge as
    ``(smaller index, larger index)``, in insertion order, and the Euclidean
    edge lengths. Key ties keep the earlier parent and the lowest vertex
    index is added first, so the result is deterministic.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2 or len(X) < 2:
        raise ValueError("need at least 2 points as an (n, d) array")
    if not np.all(np.isfinite(X)):
        raise ValueError("coordinates must be finite")
    n = len(X)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    key = ((X - X[0]) ** 2).sum(axis=1)
    parent = np.zeros(n, dtype=np.intp)
    key[0] = np.inf
    edges = np.empty((n - 1, 2), dtype=np.intp)
    weights = np.empty(n - 1)
    for t in range(n - 1):
        j = int(np.argmin(key))
        p = int(parent[j])
        edges[t] = (min(p, j), max(p, j))
        weights[t] = key[j]
        in_tree[j] = True
        key[j] = np.inf
        dj = ((X - X[j]) ** 2).sum(axis=1)
        better = (dj < key) & ~in_tree
        key[better] = dj[better]
        parent[better] = j
    return edges, np.sqrt(weights)


def fr_cross_count(X, y) -> int:
    """Number of MST edges whose endpoints carry different labels."""
    X, y, _ = check_labeled(X, y)
    edges, _ = euclidean_mst(X)
    return int(np.count_nonzero(y[edges[:, 0]] != y[edges[:, 1]]))


def _divergence(cross: int, n_a: int, n_b: int) -> float:
    n = n_a + n_b
    return float(np.clip(1.0 - cross * n / (2.0 * n_a * n_b), 0.0, 1.0))


def hp_divergence(X, y) -> float:
    X, y, _ = check_labeled(X, y)
    n_b = int(y.sum())
    return _divergence(fr_cross_count(X, y), len(y) - n_b, n_b)


def ghp_bounds(divergence: float, p: float = 0.5) -> tuple[float, float]:
    """``(lower, upper)`` BER bounds for divergence ``D`` and class-A prior ``p``."""
    q = 1.0 - p
    u = 4.0 * p * q * divergence + (p - q) ** 2
    u = min(max(u, 0.0), 1.0)
    return 0.5 - 0.5 * np.sqrt(u), 0.5 - 0.5 * u


def ghp_estimate(X, y) -> GhpEstimate:
    X, y, _ = check_labeled(X, y)
    n = len(y)
    n_b = int(y.sum())
    n_a = n - n_b
    cross = fr_cross_count(X, y)
    div = _divergence(cross, n_a, n_b)
    lower, upper = ghp_bounds(div, n_a / n)
    return GhpEstimate(
        lower=float(lower),
        upper=float(upper),
        mid=float(0.5 * (lower + upper)),
        cross_edges=cross,
        divergence=div,
    )


class GHPEstimator(BERMixin, BaseEstimator):
    """Generalised Henze-Penrose BER bounds; no tunable parameters.

    ``estimates_`` holds ``ghp_L``, ``ghp_M`` and ``ghp_H``; the raw cross
    count and divergence are kept as ``cross_edges_`` and ``divergence_``.
    """

    _headline = "ghp_L"

    def fit(self, X, y):
        res = ghp_estimate(X, y)
        self.cross_edges_ = res.cross_edges
        self.divergence_ = res.divergence
        self.estimates_ = {"ghp_L": res.lower, "ghp_M": res.mid, "ghp_H": res.upper}
        return self
