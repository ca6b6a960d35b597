"""Density-based BER estimators.

* GKDE: fixed-bandwidth Gaussian KDE per class, plugged into the normalised
  maximum-likelihood score.
* CLAKDE: ratio of cross-class to leave-one-out self-class mean densities
  under an adaptive KDE, halved.
* GC: mean of the GHP lower bound and CLAKDE.
* NB: training error of a Gaussian naive Bayes classifier.

All density sums run in the log domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ._base import BaseEstimator, BERMixin, check_labeled

#: fixed GKDE bandwidths, each reported as its own estimator id
GKDE_BANDWIDTHS = (0.0025, 0.05, 0.1, 0.25, 0.5)

_LOG_2PI = np.log(2.0 * np.pi)
_CHUNK = 1024


def gkde_id(h) -> str:
    return "gkde_silverman" if h == "silverman" else f"gkde_h{h:g}"


def _sqdist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    D = (
        np.einsum("ij,ij->i", A, A)[:, None]
        - 2.0 * A @ B.T
        + np.einsum("ij,ij->i", B, B)[None, :]
    )
    return np.maximum(D, 0.0, out=D)


def gaussian_kde_logpdf(query, refs, h: float) -> float:
    """Log of the fixed-bandwidth Gaussian KDE of ``refs`` at ``query``."""
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    refs = np.atleast_2d(np.asarray(refs, dtype=np.float64))
    q = np.asarray(query, dtype=np.float64).reshape(1, -1)
    m, d = refs.shape
    sq = ((refs - q) ** 2).sum(axis=1)
    return float(logsumexp(-0.5 * sq / h**2) - np.log(m) - d * np.log(h) - 0.5 * d * _LOG_2PI)


def silverman_bandwidth(points) -> float:
    """Silverman's rule for a single isotropic bandwidth.

    ``(4 / (d + 2)) ** (1 / (d + 4)) * m ** (-1 / (d + 4))`` times the mean
    per-feature sample standard deviation.
    """
    X = np.atleast_2d(np.asarray(points, dtype=np.float64))
    m, d = X.shape
    if m < 2:
        raise ValueError("need at least 2 points")
    scale = X.std(axis=0, ddof=1).mean()
    if not scale > 0:
        raise ValueError("zero-variance input")
    return float((4.0 / (d + 2)) ** (1.0 / (d + 4)) * m ** (-1.0 / (d + 4)) * scale)


def _class_log_likelihoods(X, y, bandwidths) -> np.ndarray:
    """``out[b, i, k]`` = log KDE of class k at point i with bandwidth ``bandwidths[b, k]``."""
    n, d = X.shape
    hs = np.asarray(bandwidths, dtype=np.float64).reshape(-1, 2)
    out = np.empty((len(hs), n, 2))
    members = [np.flatnonzero(y == k) for k in (0, 1)]
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        D = _sqdist(X[start:stop], X)
        rows = np.arange(stop - start)
        D[rows, rows + start] = 0.0
        for k, idx in enumerate(members):
            Dk = D[:, idx]
            dmin = Dk.min(axis=1, keepdims=True)
            shifted = Dk - dmin
            for b in range(len(hs)):
                inv = 0.5 / hs[b, k] ** 2
                s = np.log(np.exp(shifted * -inv).sum(axis=1))
                out[b, start:stop, k] = s - dmin[:, 0] * inv
    counts = np.array([len(m) for m in members], dtype=np.float64)
    out -= np.log(counts)[None, None, :]
    out -= (d * np.log(hs) + 0.5 * d * _LOG_2PI)[:, None, :]
    return out


def _gkde_from_loglik(loglik: np.ndarray, counts: np.ndarray) -> float:
    n = counts.sum()
    log_norm = logsumexp(loglik, axis=0)
    ratios = np.exp(loglik - log_norm[None, :] + np.log(counts / n)[None, :])
    return float(1.0 - ratios.max(axis=1).sum())


def gkde_estimates(X, y, bandwidths=GKDE_BANDWIDTHS) -> dict:
    """GKDE estimate for several bandwidths sharing one distance pass.

    ``bandwidths`` may contain ``"silverman"``, which gives each class the
    Silverman bandwidth of its own points. Keys of the result are the
    bandwidth entries as given.
    """
    X, y, _ = check_labeled(X, y)
    hs = []
    for h in bandwidths:
        if h == "silverman":
            hs.append([silverman_bandwidth(X[y == k]) for k in (0, 1)])
            continue
        if not float(h) > 0:
            raise ValueError("bandwidth must be positive")
        hs.append([float(h)] * 2)
    counts = np.bincount(y, minlength=2).astype(np.float64)
    ll = _class_log_likelihoods(X, y, hs)
    return {h: _gkde_from_loglik(ll[b], counts) for b, h in enumerate(bandwidths)}


def gkde_estimate(X, y, h: float) -> float:
    """GKDE BER estimate at bandwidth ``h`` (no leave-one-out; priors ``n_k / n``)."""
    return gkde_estimates(X, y, [h])[h]


class GKDEEstimator(BERMixin, BaseEstimator):
    """Gaussian-KDE plug-in estimator over a list of bandwidths.

    ``bandwidths`` entries are positive floats or ``"silverman"``.
    ``estimates_`` is keyed ``gkde_h<h>`` / ``gkde_silverman``.
    """

    def __init__(self, bandwidths=GKDE_BANDWIDTHS + ("silverman",)):
        self.bandwidths = bandwidths

    def fit(self, X, y):
        res = gkde_estimates(X, y, self.bandwidths)
        self.estimates_ = {gkde_id(h): v for h, v in res.items()}
        self._headline = gkde_id(self.bandwidths[0])
        return self


def _golden_max(f, lo: float, hi: float, tol: float):
    """Golden-section search for the maximum of a unimodal ``f`` on ``[lo, hi]``."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    e = a + invphi * (b - a)
    fc, fe = f(c), f(e)
    while b - a > tol:
        if fc >= fe:
            b, e, fe = e, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + invphi * (b - a)
            fe = f(e)
    return (c, fc) if fc >= fe else (e, fe)


class AdaptiveKDE(BaseEstimator):
    """Sample-point adaptive Gaussian KDE with diagonal per-point bandwidths.

    Each reference point ``j`` gets the bandwidth vector
    ``scale_ * r_j / sqrt(d) * s``, where ``r_j`` is the distance to its
    ``ceil(sqrt(m))``-th nearest neighbour (measured after dividing each
    feature by ``s``) and ``s`` holds the per-feature standard deviations
    normalised to unit geometric mean. ``scale_`` is the global multiplier
    that maximises the leave-one-out log-likelihood, found by golden-section
    search over ``log(scale)``. Nothing is random, and scaling the data by
    ``c`` scales every bandwidth by ``c``.

    Parameters
    ----------
    scale_bounds : tuple of float
        Search interval for the global multiplier.
    tol : float
        Golden-section tolerance on ``log(scale)``.
    """

    def __init__(self, scale_bounds=(0.05, 20.0), tol=1e-2):
        self.scale_bounds = scale_bounds
        self.tol = tol

    def fit(self, X, y=None):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        m, d = X.shape
        if m < max(4, d + 1):
            raise ValueError(f"adaptive KDE needs at least max(4, d+1) = {max(4, d + 1)} points, got {m}")
        std = X.std(axis=0, ddof=1)
        if not np.any(std > 0):
            raise ValueError("all points are identical")
        std = np.maximum(std, 1e-9 * std.max())
        feature_scale = std / np.exp(np.log(std).mean())

        Z = X / feature_scale
        Q = _sqdist(Z, Z)
        np.fill_diagonal(Q, 0.0)
        k = min(int(np.ceil(np.sqrt(m))), m - 1)
        off = Q.copy()
        np.fill_diagonal(off, np.inf)
        r = np.sqrt(np.partition(off, k - 1, axis=1)[:, k - 1])
        del off
        positive = r[r > 0]
        if positive.size == 0:
            raise ValueError("degenerate sample: no distinct neighbours")
        r = np.maximum(r, 1e-6 * np.median(positive))

        self.X_ = X
        self.feature_scale_ = feature_scale
        self.n_neighbors_ = k
        self.base_ = r / np.sqrt(d)
        self._Q = Q

        lo, hi = np.log(self.scale_bounds[0]), np.log(self.scale_bounds[1])
        log_scale, ll = _golden_max(self._loo_loglik, lo, hi, self.tol)
        self.scale_ = float(np.exp(log_scale))
        self.loo_loglik_ = float(ll)
        self.bandwidths_ = self.scale_ * self.base_[:, None] * feature_scale[None, :]
        self._buf = None
        return self

    def _log_kernel(self, Q, scale):
        # log N(z | ref_j, diag(bandwidth_j^2)) given squared scaled distances Q
        beta = scale * self.base_
        d = self.X_.shape[1]
        log_det = d * np.log(beta) + np.log(self.feature_scale_).sum()
        return -0.5 * Q / beta[None, :] ** 2 - log_det[None, :] - 0.5 * d * _LOG_2PI

    def _loo_scores(self, scale):
        # in-place log-sum-exp over one reused buffer; this runs once per search step
        beta = scale * self.base_
        d = self.X_.shape[1]
        log_det = d * np.log(beta) + np.log(self.feature_scale_).sum() + 0.5 * d * _LOG_2PI
        buf = getattr(self, "_buf", None)
        if buf is None or buf.shape != self._Q.shape:
            buf = self._buf = np.empty_like(self._Q)
        np.multiply(self._Q, (-0.5 / beta**2)[None, :], out=buf)
        buf -= log_det[None, :]
        np.fill_diagonal(buf, -np.inf)
        top = buf.max(axis=1)
        buf -= top[:, None]
        np.exp(buf, out=buf)
        return np.log(buf.sum(axis=1)) + top - np.log(len(buf) - 1)

    def _loo_loglik(self, log_scale):
        return float(self._loo_scores(np.exp(log_scale)).sum())

    def loo_loglik(self, scale: float) -> float:
        """Leave-one-out log-likelihood of the training points at multiplier ``scale``."""
        return float(self._loo_scores(scale).sum())

    def loo_score_samples(self) -> np.ndarray:
        """Log density at each training point with that point left out."""
        return self._loo_scores(self.scale_)

    def score_samples(self, X) -> np.ndarray:
        """Log density at each row of ``X`` using all reference points."""
        Z = np.atleast_2d(np.asarray(X, dtype=np.float64)) / self.feature_scale_
        Zref = self.X_ / self.feature_scale_
        out = np.empty(len(Z))
        for start in range(0, len(Z), _CHUNK):
            Q = _sqdist(Z[start : start + _CHUNK], Zref)
            out[start : start + _CHUNK] = logsumexp(self._log_kernel(Q, self.scale_), axis=1)
        return out - np.log(len(Zref))


def adaptive_kde_fit(points) -> AdaptiveKDE:
    return AdaptiveKDE().fit(points)


def adaptive_kde_logpdf(model: AdaptiveKDE, query, exclude: int | None = None) -> float:
    """Log density of ``model`` at ``query``; ``exclude`` drops one reference point."""
    q = np.asarray(query, dtype=np.float64).reshape(1, -1)
    if exclude is None:
        return float(model.score_samples(q)[0])
    m = len(model.X_)
    if not 0 <= exclude < m:
        raise IndexError(f"exclude index {exclude} out of range for {m} reference points")
    if m < 2:
        raise ValueError("cannot exclude the only reference point")
    Q = _sqdist(q / model.feature_scale_, model.X_ / model.feature_scale_)
    K = model._log_kernel(Q, model.scale_)[0]
    K[exclude] = -np.inf
    return float(logsumexp(K) - np.log(m - 1))


@dataclass(frozen=True)
class ComparativeScores:
    """Log mean-density scores; ``g_ab`` is class A's points under class B's density."""

    g_aa: float
    g_bb: float
    g_ab: float
    g_ba: float
    j_value: float
    ber_hat: float


def clakde_scores(X, y) -> ComparativeScores:
    X, y, _ = check_labeled(X, y)
    xa, xb = X[y == 0], X[y == 1]
    model_a = AdaptiveKDE().fit(xa)
    model_b = AdaptiveKDE().fit(xb)
    g_aa = logsumexp(model_a.loo_score_samples()) - np.log(len(xa))
    g_bb = logsumexp(model_b.loo_score_samples()) - np.log(len(xb))
    g_ab = logsumexp(model_b.score_samples(xa)) - np.log(len(xa))
    g_ba = logsumexp(model_a.score_samples(xb)) - np.log(len(xb))
    log_j = np.logaddexp(g_ab, g_ba) - np.logaddexp(g_aa, g_bb)
    j = float(min(np.exp(log_j), 1.0))
    return ComparativeScores(
        g_aa=float(g_aa), g_bb=float(g_bb), g_ab=float(g_ab), g_ba=float(g_ba),
        j_value=j, ber_hat=j / 2.0,
    )


def clakde_estimate(X, y) -> float:
    """Comparative adaptive-KDE estimate ``J / 2`` with ``J`` clamped to [0, 1]."""
    return clakde_scores(X, y).ber_hat


def gc_estimate(ghp_lower: float, clakde: float) -> float:
    return 0.5 * (ghp_lower + clakde)


class CLAKDEEstimator(BERMixin, BaseEstimator):
    """Comparative leave-one-out adaptive-KDE estimator (``clakde``)."""

    _headline = "clakde"

    def fit(self, X, y):
        self.scores_ = clakde_scores(X, y)
        self.estimates_ = {"clakde": self.scores_.ber_hat}
        return self


def naive_bayes_error(X, y) -> float:
    """Training error of a Gaussian naive Bayes classifier.

    Per-class, per-feature ML means and variances (floored at 1e-9), priors
    from the class counts, and ties resolved to class A.
    """
    X, y, _ = check_labeled(X, y, min_per_class=2)
    n = len(y)
    log_post = np.empty((n, 2))
    for k in (0, 1):
        Xk = X[y == k]
        mean = Xk.mean(axis=0)
        var = np.maximum(Xk.var(axis=0), 1e-9)
        log_post[:, k] = (
            np.log(len(Xk) / n)
            - 0.5 * np.log(2.0 * np.pi * var).sum()
            - 0.5 * (((X - mean) ** 2) / var).sum(axis=1)
        )
    if not np.all(np.isfinite(log_post)):
        raise ValueError("degenerate naive Bayes posterior")
    pred = (log_post[:, 1] > log_post[:, 0]).astype(np.intp)
    return float(np.mean(pred != y))


class NaiveBayesEstimator(BERMixin, BaseEstimator):
    _headline = "nb"

    def fit(self, X, y):
        self.estimates_ = {"nb": naive_bayes_error(X, y)}
        return self
