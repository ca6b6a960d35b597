"""BER estimators with a scikit-learn style ``fit(X, y)`` surface.

:func:`run_estimators` evaluates any subset of estimator ids on one dataset,
computing each underlying method once (e.g. the three kNN ids share one
neighbour search, and ``gc`` reuses the GHP and CLAKDE results).
"""

from __future__ import annotations

from .ghp import GHPEstimator, GhpEstimate, euclidean_mst, fr_cross_count, ghp_estimate, hp_divergence
from .kde import (
    GKDE_BANDWIDTHS,
    AdaptiveKDE,
    CLAKDEEstimator,
    ComparativeScores,
    GKDEEstimator,
    NaiveBayesEstimator,
    adaptive_kde_fit,
    adaptive_kde_logpdf,
    clakde_estimate,
    clakde_scores,
    gaussian_kde_logpdf,
    gc_estimate,
    gkde_estimate,
    gkde_estimates,
    gkde_id,
    naive_bayes_error,
    silverman_bandwidth,
)
from .knn import KNNEstimator, KnnEstimate, knn_estimate, knn_loo_error, knn_loo_errors, knn_lower_bound
from .oracle import BayesClassifierEstimator, bayes_classifier_error

KNN_IDS = ("knn_H", "knn_M", "knn_L")
GHP_IDS = ("ghp_L", "ghp_M", "ghp_H")
GKDE_IDS = tuple(gkde_id(h) for h in GKDE_BANDWIDTHS) + ("gkde_silverman",)

#: every non-oracle estimator id, in reporting order
DEFAULT_ESTIMATORS = KNN_IDS + GHP_IDS + GKDE_IDS + ("clakde", "gc", "nb")
ALL_ESTIMATORS = DEFAULT_ESTIMATORS + ("bayes",)

_GKDE_BY_ID = {gkde_id(h): h for h in GKDE_BANDWIDTHS + ("silverman",)}


def run_estimators(X, y, ids=DEFAULT_ESTIMATORS, spec=None, diagnostics: dict | None = None) -> dict[str, float]:
    """Evaluate the estimator ``ids`` on ``(X, y)``; ``bayes`` needs ``spec``.

    When ``diagnostics`` is a dict it receives the selected kNN ``k``, the
    MST cross-edge count and divergence, and the CLAKDE ratio ``J``.
    """
    ids = tuple(ids)
    unknown = set(ids) - set(ALL_ESTIMATORS)
    if unknown:
        raise ValueError(f"unknown estimator ids: {sorted(unknown)}")
    out: dict[str, float] = {}
    diag = {} if diagnostics is None else diagnostics
    wanted = set(ids)
    if wanted & set(KNN_IDS):
        knn = KNNEstimator().fit(X, y)
        out.update(knn.estimates_)
        diag["knn_k0"] = knn.k0_
    if wanted & (set(GHP_IDS) | {"gc"}):
        ghp = GHPEstimator().fit(X, y)
        out.update(ghp.estimates_)
        diag["ghp_cross_edges"] = ghp.cross_edges_
        diag["ghp_divergence"] = ghp.divergence_
    gkde = [_GKDE_BY_ID[i] for i in GKDE_IDS if i in wanted]
    if gkde:
        out.update(GKDEEstimator(bandwidths=tuple(gkde)).fit(X, y).estimates_)
    if wanted & {"clakde", "gc"}:
        clakde = CLAKDEEstimator().fit(X, y)
        out.update(clakde.estimates_)
        diag["clakde_j"] = clakde.scores_.j_value
    if "gc" in wanted:
        out["gc"] = gc_estimate(out["ghp_L"], out["clakde"])
    if "nb" in wanted:
        out.update(NaiveBayesEstimator().fit(X, y).estimates_)
    if "bayes" in wanted:
        out.update(BayesClassifierEstimator(spec).fit(X, y).estimates_)
    return {i: float(out[i]) for i in ids}


__all__ = [
    "ALL_ESTIMATORS",
    "AdaptiveKDE",
    "BayesClassifierEstimator",
    "CLAKDEEstimator",
    "ComparativeScores",
    "DEFAULT_ESTIMATORS",
    "GHPEstimator",
    "GHP_IDS",
    "GKDEEstimator",
    "GKDE_BANDWIDTHS",
    "GKDE_IDS",
    "GhpEstimate",
    "KNNEstimator",
    "KNN_IDS",
    "KnnEstimate",
    "NaiveBayesEstimator",
    "adaptive_kde_fit",
    "adaptive_kde_logpdf",
    "bayes_classifier_error",
    "clakde_estimate",
    "clakde_scores",
    "euclidean_mst",
    "fr_cross_count",
    "gaussian_kde_logpdf",
    "gc_estimate",
    "ghp_estimate",
    "gkde_estimate",
    "gkde_estimates",
    "gkde_id",
    "hp_divergence",
    "knn_estimate",
    "knn_loo_error",
    "knn_loo_errors",
    "knn_lower_bound",
    "naive_bayes_error",
    "run_estimators",
    "silverman_bandwidth",
]
