from __future__ import annotations

import numpy as np

from ..ground_truth import bayes_classify
from ..scenarios import ScenarioSpec
from ._base import BaseEstimator, BERMixin, check_labeled


def bayes_classifier_error(spec: ScenarioSpec, X, y) -> float:
    """Error rate of the true Bayes classifier on one finite sample (labels: 0 = A)."""
    X, y, _ = check_labeled(X, y)
    return float(np.mean(bayes_classify(spec, X) != y))


class BayesClassifierEstimator(BERMixin, BaseEstimator):
    """Oracle estimator that knows the generating distributions.

    Its deviation from the true BER is pure sampling noise and sets the
    floor every non-parametric estimator is measured against.
    """

    _headline = "bayes"

    def __init__(self, spec: ScenarioSpec | None = None):
        self.spec = spec

    def fit(self, X, y):
        if self.spec is None:
            raise ValueError("BayesClassifierEstimator needs the scenario spec")
        self.estimates_ = {"bayes": bayes_classifier_error(self.spec, X, y)}
        return self
