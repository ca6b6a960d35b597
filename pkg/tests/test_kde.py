import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from berbench.estimators import (
    CLAKDEEstimator,
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
    naive_bayes_error,
    run_estimators,
    silverman_bandwidth,
)
from berbench.ground_truth import calibrate
from berbench.scenarios import build_scenario, sample_dataset


def labels(n_a, n_b):
    return np.array([0] * n_a + [1] * n_b)


def linear_kde(x, refs, h):
    d = len(x)
    total = 0.0
    for r in refs:
        u = [(a - b) / h for a, b in zip(x, r)]
        total += (2 * math.pi) ** (-d / 2) * math.exp(-0.5 * sum(t * t for t in u))
    return total / (len(refs) * h**d)


def linear_gkde(X, y, h):
    """Direct transcription of the normalised max-likelihood score, linear domain."""
    n = len(X)
    classes = [X[y == k] for k in (0, 1)]
    L = [[linear_kde(x, ck, h) for ck in classes] for x in X]
    norms = [sum(L[j][k] for j in range(n)) for k in (0, 1)]
    prior = [len(c) / n for c in classes]
    return 1 - sum(max(L[i][k] / norms[k] * prior[k] for k in (0, 1)) for i in range(n))


def naive_kernel_logpdf(model, query, exclude=None):
    total, count = 0.0, 0
    for j, (ref, bw) in enumerate(zip(model.X_, model.bandwidths_)):
        if j == exclude:
            continue
        count += 1
        dens = 1.0
        for q, r, b in zip(query, ref, bw):
            dens *= math.exp(-0.5 * ((q - r) / b) ** 2) / (math.sqrt(2 * math.pi) * b)
        total += dens
    return math.log(total / count)


def hand_nb(X, y):
    """Gaussian NB written out per feature with Python floats."""
    n, d = X.shape
    stats = {}
    for k in (0, 1):
        rows = X[y == k].tolist()
        means = [sum(r[j] for r in rows) / len(rows) for j in range(d)]
        vars_ = [max(sum((r[j] - means[j]) ** 2 for r in rows) / len(rows), 1e-9) for j in range(d)]
        stats[k] = (len(rows) / n, means, vars_)
    wrong = 0
    for row, lab in zip(X.tolist(), y.tolist()):
        score = {}
        for k, (prior, means, vars_) in stats.items():
            s = math.log(prior)
            for v, m, var in zip(row, means, vars_):
                s += -0.5 * math.log(2 * math.pi * var) - (v - m) ** 2 / (2 * var)
            score[k] = s
        pred = 1 if score[1] > score[0] else 0
        wrong += pred != lab
    return wrong / n


class TestKernelLogpdf:
    def test_single_ref_2d(self):
        assert gaussian_kde_logpdf(np.zeros(2), np.zeros((1, 2)), 1.0) == pytest.approx(-1.8378771, abs=1e-7)

    def test_single_ref_half_bandwidth(self):
        assert gaussian_kde_logpdf(np.zeros(1), np.zeros((1, 1)), 0.5) == pytest.approx(math.log(0.7978846), abs=1e-7)

    def test_naive_sum(self):
        rng = np.random.default_rng(0)
        refs = rng.normal(size=(50, 6))
        for q in rng.normal(size=(5, 6)):
            got = gaussian_kde_logpdf(q, refs, 0.8)
            assert got == pytest.approx(math.log(linear_kde(q, refs, 0.8)), rel=1e-10)

    def test_far_query_finite(self):
        assert np.isfinite(gaussian_kde_logpdf(np.full(3, 1e4), np.zeros((2, 3)), 0.01))

    def test_rejects_bandwidth(self):
        with pytest.raises(ValueError):
            gaussian_kde_logpdf(np.zeros(1), np.zeros((1, 1)), 0.0)


class TestSilverman:
    def test_unit_variance(self):
        x = np.random.default_rng(1).normal(size=(100, 1))
        x = (x - x.mean()) / x.std(ddof=1)
        assert (4 / 3) ** 0.2 == pytest.approx(1.0592, abs=1e-4)
        assert silverman_bandwidth(x) == pytest.approx(1.0592 * 100**-0.2, abs=1e-4)
        assert silverman_bandwidth(x) == pytest.approx(0.42168, abs=1e-5)

    def test_scale_equivariant(self):
        x = np.random.default_rng(2).normal(size=(60, 3))
        assert silverman_bandwidth(7.5 * x) == pytest.approx(7.5 * silverman_bandwidth(x), rel=1e-12)

    def test_sample_size_exponent(self):
        rng = np.random.default_rng(3)
        d = 3

        def standardized(m):
            z = rng.normal(size=(m, d))
            return (z - z.mean(axis=0)) / z.std(axis=0, ddof=1)

        ratio = silverman_bandwidth(standardized(400)) / silverman_bandwidth(standardized(100))
        assert ratio == pytest.approx(4 ** (-1 / (d + 4)), rel=1e-12)

    def test_rejects(self):
        with pytest.raises(ValueError):
            silverman_bandwidth(np.ones((5, 2)))
        with pytest.raises(ValueError):
            silverman_bandwidth(np.ones((1, 2)))


class TestGkde:
    def test_coincident_points(self):
        X = np.zeros((2, 2))
        assert gkde_estimate(X, labels(1, 1), 0.3) == pytest.approx(0.5)

    def test_far_singletons(self):
        X = np.array([[0.0, 0.0], [50.0, 50.0]])
        assert gkde_estimate(X, labels(1, 1), 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_transcription_oracle(self):
        rng = np.random.default_rng(4)
        X = np.vstack([rng.normal(size=(10, 2)), rng.normal(size=(10, 2)) + 0.8])
        y = labels(10, 10)
        assert gkde_estimate(X, y, 0.25) == pytest.approx(linear_gkde(X, y, 0.25), rel=1e-9)

    def test_huge_bandwidth_half(self):
        X = np.random.default_rng(5).uniform(-1, 1, size=(40, 3))
        assert gkde_estimate(X, labels(20, 20), 1e6) == pytest.approx(0.5, abs=1e-3)

    def test_many_bandwidths_agree_with_single(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(60, 3))
        y = labels(30, 30)
        multi = gkde_estimates(X, y, (0.05, 0.5, "silverman"))
        assert multi[0.05] == gkde_estimate(X, y, 0.05)
        assert multi[0.5] == gkde_estimate(X, y, 0.5)
        assert set(multi) == {0.05, 0.5, "silverman"}

    def test_chunked_matches_dense(self):
        # 2100 rows span three distance chunks; oracle uses one dense matrix
        from scipy.spatial.distance import cdist
        from scipy.special import logsumexp

        rng = np.random.default_rng(7)
        X = rng.normal(size=(2100, 2))
        y = labels(1000, 1100)
        h = 0.3
        D = cdist(X, X, "sqeuclidean")
        ll = np.column_stack(
            [logsumexp(-0.5 * D[:, y == k] / h**2, axis=1) - np.log((y == k).sum()) - 2 * np.log(h) for k in (0, 1)]
        )
        ll -= np.log(2 * np.pi)
        counts = np.bincount(y)
        ratio = np.exp(ll - logsumexp(ll, axis=0) + np.log(counts / len(y)))
        assert gkde_estimate(X, y, h) == pytest.approx(1 - ratio.max(axis=1).sum(), rel=1e-9)

    def test_estimator_ids(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(40, 2))
        model = GKDEEstimator().fit(X, labels(20, 20))
        assert set(model.estimates_) == {
            "gkde_h0.0025",
            "gkde_h0.05",
            "gkde_h0.1",
            "gkde_h0.25",
            "gkde_h0.5",
            "gkde_silverman",
        }

    def test_high_dimension_finite(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(400, 30)) * 10
        res = gkde_estimates(X, labels(200, 200), (0.0025, 0.5, "silverman"))
        assert all(np.isfinite(v) for v in res.values())


class TestAdaptiveKde:
    def test_optimizer_postcondition(self):
        x = np.random.default_rng(10).normal(size=(500, 1))
        model = adaptive_kde_fit(x)
        best = model.loo_loglik(model.scale_)
        assert best >= model.loo_loglik(0.5 * model.scale_)
        assert best >= model.loo_loglik(2.0 * model.scale_)
        assert best == pytest.approx(model.loo_loglik_)

    def test_scale_equivariance(self):
        x = np.random.default_rng(11).normal(size=(80, 3))
        a = adaptive_kde_fit(x)
        b = adaptive_kde_fit(10 * x)
        np.testing.assert_allclose(b.bandwidths_, 10 * a.bandwidths_, rtol=1e-9)
        assert np.all(a.bandwidths_ > 0)

    def test_grid_mise_beats_extreme_fixed(self):
        x = np.random.default_rng(12).normal(size=(500, 1))
        model = adaptive_kde_fit(x)
        grid = np.linspace(-4, 4, 801)
        truth = norm.pdf(grid)
        step = grid[1] - grid[0]

        def ise(dens):
            return float(((dens - truth) ** 2).sum() * step)

        adaptive = np.exp(model.score_samples(grid[:, None]))
        fixed = {h: np.exp([gaussian_kde_logpdf(np.array([g]), x, h) for g in grid]) for h in (0.01, 5.0)}
        assert ise(adaptive) < ise(fixed[0.01])
        assert ise(adaptive) < ise(fixed[5.0])

    def test_exclude_two_identical_refs(self):
        x = np.array([[0.3, -0.2], [0.3, -0.2], [1.0, 1.0], [2.0, 0.0], [-1.0, 0.5]])
        model = adaptive_kde_fit(x)
        q = np.array([0.1, 0.1])
        full = adaptive_kde_logpdf(model, q)
        assert full == pytest.approx(naive_kernel_logpdf(model, q), rel=1e-10)
        assert adaptive_kde_logpdf(model, q, exclude=0) == pytest.approx(
            naive_kernel_logpdf(model, q, exclude=0), rel=1e-10
        )

    def test_naive_twenty_points(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(20, 3))
        model = adaptive_kde_fit(x)
        for i, q in enumerate(rng.normal(size=(4, 3))):
            assert adaptive_kde_logpdf(model, q) == pytest.approx(naive_kernel_logpdf(model, q), rel=1e-10)
            assert adaptive_kde_logpdf(model, q, exclude=i) == pytest.approx(
                naive_kernel_logpdf(model, q, exclude=i), rel=1e-10
            )
        loo = model.loo_score_samples()
        for i in range(20):
            assert loo[i] == pytest.approx(naive_kernel_logpdf(model, x[i], exclude=i), rel=1e-10)

    def test_excluded_point_is_not_used(self):
        rng = np.random.default_rng(14)
        x = rng.normal(size=(10, 2))
        model = adaptive_kde_fit(x)
        before = adaptive_kde_logpdf(model, x[3], exclude=3)
        model.X_ = model.X_.copy()
        model.X_[3] = [1e6, 1e6]
        assert adaptive_kde_logpdf(model, x[3], exclude=3) == pytest.approx(before, rel=1e-12)

    def test_bad_exclude(self):
        model = adaptive_kde_fit(np.random.default_rng(15).normal(size=(10, 2)))
        with pytest.raises(IndexError):
            adaptive_kde_logpdf(model, np.zeros(2), exclude=10)

    def test_fit_rejects(self):
        with pytest.raises(ValueError):
            adaptive_kde_fit(np.zeros((3, 1)))
        with pytest.raises(ValueError):
            adaptive_kde_fit(np.ones((20, 2)))
        with pytest.raises(ValueError):
            adaptive_kde_fit(np.random.default_rng(0).normal(size=(5, 6)))


class TestClakde:
    def test_far_apart(self):
        rng = np.random.default_rng(16)
        X = np.vstack([rng.normal(size=(100, 2)), rng.normal(size=(100, 2)) + 100])
        assert clakde_estimate(X, labels(100, 100)) < 0.01

    def test_identical_distributions(self):
        rng = np.random.default_rng(17)
        hits = 0
        for _ in range(100):
            est = clakde_estimate(rng.normal(size=(2000, 2)), labels(1000, 1000))
            hits += 0.4 <= est <= 0.5
        assert hits >= 90

    def test_gvg_quarter_envelope(self):
        table = calibrate("GvG", 2, 0.2, 0.3, max_gap=0.01, rng=np.random.default_rng(18))
        entry = min(table.entries, key=lambda e: abs(e.ber - 0.25))
        rng = np.random.default_rng(19)
        ests = [clakde_estimate(*sample_dataset(entry.spec, 2500, rng)) for _ in range(4)]
        assert 0.15 <= np.mean(ests) <= 0.35

    def test_symmetric(self):
        rng = np.random.default_rng(20)
        X = np.vstack([rng.normal(size=(60, 3)), rng.normal(size=(60, 3)) + 0.5])
        y = labels(60, 60)
        a = clakde_scores(X, y)
        b = clakde_scores(X, 1 - y)
        assert a.ber_hat == b.ber_hat
        assert (a.g_aa, a.g_ab) == (b.g_bb, b.g_ba)

    def test_scores_relation(self):
        rng = np.random.default_rng(21)
        X = rng.normal(size=(80, 2))
        X[40:] += 1.0
        s = clakde_scores(X, labels(40, 40))
        j = min(1.0, (math.exp(s.g_ab) + math.exp(s.g_ba)) / (math.exp(s.g_aa) + math.exp(s.g_bb)))
        assert s.j_value == pytest.approx(j, rel=1e-12)
        assert s.ber_hat == s.j_value / 2

    def test_estimator_api(self):
        rng = np.random.default_rng(22)
        model = CLAKDEEstimator().fit(rng.normal(size=(40, 2)), labels(20, 20))
        assert 0 <= model.estimate_ <= 0.5


class TestGc:
    @pytest.mark.parametrize("a,b,out", [(0, 0, 0), (0.5, 0.5, 0.5), (0.2, 0.3, 0.25)])
    def test_mean(self, a, b, out):
        assert gc_estimate(a, b) == pytest.approx(out)


class TestNaiveBayes:
    def test_separated(self):
        X = np.array([[-1.0], [-1.1], [1.0], [1.1]])
        assert naive_bayes_error(X, labels(2, 2)) == 0.0

    def test_identical_classes_tie(self):
        X = np.array([[0.0, 1.0], [2.0, 3.0], [0.0, 1.0], [2.0, 3.0]])
        assert naive_bayes_error(X, labels(2, 2)) == 0.5

    def test_hand_rolled_oracle(self):
        rng = np.random.default_rng(23)
        X = rng.normal(size=(20, 3))
        y = rng.permutation(labels(10, 10))
        X[y == 1] += 0.5
        assert naive_bayes_error(X, y) == hand_nb(X, y)

    def test_rejects_one_point_class(self):
        with pytest.raises(ValueError):
            naive_bayes_error(np.zeros((3, 1)), labels(2, 1))

    def test_estimator_api(self):
        rng = np.random.default_rng(24)
        model = NaiveBayesEstimator().fit(rng.normal(size=(20, 2)), labels(10, 10))
        assert model.estimate_ == model.estimates_["nb"]


def test_all_finite_at_d30():
    spec = build_scenario("TvT", 30, mu=2.0)
    X, y = sample_dataset(spec, 2500, np.random.default_rng(25))
    diag = {}
    res = run_estimators(X, y, diagnostics=diag)
    assert all(np.isfinite(v) for v in res.values()), res
    assert {"knn_k0", "ghp_cross_edges", "ghp_divergence", "clakde_j"} <= set(diag)


@settings(max_examples=15, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    d=st.integers(1, 30),
    n=st.integers(31, 120),
    spread=st.floats(0.01, 100),
)
def test_outputs_finite_and_ranged(seed, d, n, spread):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(2 * n, d)) * spread
    X[n:] += rng.normal() * spread
    res = run_estimators(X, labels(n, n))
    assert all(np.isfinite(v) for v in res.values()), res
    assert 0 <= res["clakde"] <= 0.5 and 0 <= res["gc"] <= 0.5
    assert res["knn_L"] <= res["knn_M"] <= res["knn_H"]
    assert res["ghp_L"] <= res["ghp_M"] <= res["ghp_H"]
