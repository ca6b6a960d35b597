"""Leave-one-out k-nearest-neighbour BER bounds with a best-k search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ._base import BaseEstimator, BERMixin, check_labeled

#: odd k from 1 to 199
DEFAULT_K_RANGE = tuple(range(1, 200, 2))


@dataclass(frozen=True)
class KnnEstimate:
    upper: float
    lower: float
    mid: float
    k0: int


def _canonical(X, y):
    # lexicographic on coordinates, then label: presentation order cannot matter
    order = np.lexsort((y,) + tuple(X.T[::-1]))
    return X[order], y[order]


def _sorted_neighbors(X: np.ndarray, K: int) -> np.ndarray:
    """Indices of the K nearest other points, by (squared distance, index)."""
    n = len(X)
    D = cdist(X, X, "sqeuclidean")
    np.fill_diagonal(D, np.inf)
    if K == n - 1:
        return np.argsort(D, axis=1, kind="stable")[:, :K]
    part = np.argpartition(D, K - 1, axis=1)[:, :K]
    dv = np.take_along_axis(D, part, axis=1)
    order = np.lexsort((part, dv), axis=-1)
    nbrs = np.take_along_axis(part, order, axis=1)
    # rows whose K-th distance is tied with an excluded point need the full sort
    kth = dv.max(axis=1)
    tied = np.flatnonzero((D <= kth[:, None]).sum(axis=1) > K)
    for r in tied:
        nbrs[r] = np.argsort(D[r], kind="stable")[:K]
    return nbrs


def knn_loo_errors(X, y, ks) -> np.ndarray:
    """LOO kNN error for every odd ``k`` in ``ks`` from one distance matrix."""
    X, y, _ = check_labeled(X, y)
    ks = np.asarray(ks, dtype=int)
    n = len(X)
    if ks.size == 0:
        raise ValueError("empty k set")
    if np.any(ks < 1) or np.any(ks >= n):
        raise ValueError(f"k must satisfy 1 <= k <= n-1 = {n - 1}")
    if np.any(ks % 2 == 0):
        raise ValueError("even k is not supported; majority vote needs odd k")
    X, y = _canonical(X, y)
    nbrs = _sorted_neighbors(X, int(ks.max()))
    votes_b = np.cumsum(y[nbrs], axis=1)[:, ks - 1]
    pred = (2 * votes_b > ks[None, :]).astype(np.intp)
    return (pred != y[:, None]).mean(axis=0)


def knn_loo_error(X, y, k: int) -> float:
    return float(knn_loo_errors(X, y, [k])[0])


def knn_lower_bound(upper: float, k: int) -> float:
    """Asymptotic lower bound on the BER implied by a k-NN error ``upper``."""
    if k > 2:
        return upper / (1.0 + np.sqrt(1.0 / k))
    if k == 2:
        return upper / 2.0
    if k == 1:
        return (1.0 - np.sqrt(max(0.0, 1.0 - 2.0 * upper))) / 2.0
    raise ValueError("k must be >= 1")


def knn_estimate(X, y, k_range=DEFAULT_K_RANGE) -> KnnEstimate:
    """Pick the k with the smallest LOO error (smallest k on ties) and derive bounds.

    ``k_range`` is silently truncated to ``k < n``.
    """
    n = len(X)
    ks = np.array(sorted(k for k in k_range if k < n), dtype=int)
    if ks.size == 0:
        raise ValueError(f"no k in k_range is below n = {n}")
    errors = knn_loo_errors(X, y, ks)
    i = int(np.argmin(errors))
    k0 = int(ks[i])
    upper = float(errors[i])
    lower = float(knn_lower_bound(upper, k0))
    return KnnEstimate(upper=upper, lower=lower, mid=0.5 * (upper + lower), k0=k0)


class KNNEstimator(BERMixin, BaseEstimator):
    """kNN-LOO BER estimator.

    Parameters
    ----------
    k_max : int, default=199
        Largest k searched; only odd k are used.

    Attributes
    ----------
    estimates_ : dict
        ``knn_H`` (LOO error at the best k), ``knn_L`` (its lower bound)
        and ``knn_M`` (their midpoint).
    k0_ : int
        The selected k.
    """

    _headline = "knn_H"

    def __init__(self, k_max: int = 199):
        self.k_max = k_max

    def fit(self, X, y):
        res = knn_estimate(X, y, range(1, self.k_max + 1, 2))
        self.k0_ = res.k0
        self.estimates_ = {"knn_H": res.upper, "knn_M": res.mid, "knn_L": res.lower}
        return self
