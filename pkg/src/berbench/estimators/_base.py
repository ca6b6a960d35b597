from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_X_y


def check_labeled(X, y, min_per_class: int = 1):
    """Validate a two-class dataset.

    Returns ``(X, y01, classes)`` where ``X`` is a C-contiguous float64
    matrix, ``y01`` holds 0 for the first sorted class (A) and 1 for the
    second (B), and ``classes`` are the original labels.
    """
    X, y = check_X_y(X, y, dtype=np.float64, order="C", ensure_min_samples=2, y_numeric=False)
    classes, y01 = np.unique(y, return_inverse=True)
    if len(classes) != 2:
        raise ValueError(f"expected exactly 2 classes, got {len(classes)}")
    counts = np.bincount(y01, minlength=2)
    if counts.min() < min_per_class:
        raise ValueError(f"each class needs at least {min_per_class} samples, got {counts.tolist()}")
    return X, y01.astype(np.intp), classes


class BERMixin:
    """Shared surface of the BER estimators.

    After ``fit(X, y)`` every estimator exposes ``estimates_``, a mapping
    from estimator id to BER estimate, and ``estimate_``, its headline value.
    """

    _headline: str = ""

    @property
    def estimate_(self) -> float:
        return self.estimates_[self._headline]

    def _check_fitted(self):
        if not hasattr(self, "estimates_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")

    def fit_estimate(self, X, y) -> dict[str, float]:
        return dict(self.fit(X, y).estimates_)


__all__ = ["BaseEstimator", "BERMixin", "check_labeled"]
