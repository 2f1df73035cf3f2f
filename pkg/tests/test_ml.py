import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from corrgeo.errors import DegenerateGroup, LeakageError, SingleClass, SingularCovariance, TooFewSamples
from corrgeo.ml import (
    anova_f,
    anova_f_select,
    binary_metrics,
    check_disjoint,
    elastic_net_fit,
    elastic_net_predict,
    kkt_residual,
    lambda_max,
    lda_fit,
    lda_predict,
    linear_svm_decision,
    linear_svm_fit,
    make_cv_plan,
    pca_apply,
    pca_fit,
    regression_metrics,
    roc_auc,
    standardize_apply,
    standardize_fit,
)
from corrgeo.ml.cv import age_strata

seeds = st.integers(0, 2**32 - 1)


# -- preprocessing -------------------------------------------------------------------


def test_standardize_examples():
    X = np.array([[0.0, 5.0], [2.0, 5.0]])
    s = standardize_fit(X)
    Z = standardize_apply(s, X)
    assert np.allclose(Z[:, 0], [-1, 1])
    assert np.array_equal(Z[:, 1], [0.0, 0.0])
    s = standardize_fit(np.array([[0.0], [2.0]]))
    assert standardize_apply(s, [[4.0]])[0, 0] == pytest.approx(3.0)


def test_pca_examples():
    rng = np.random.default_rng(0)
    u = rng.normal(size=5)
    X = np.outer(rng.normal(size=20), u)
    assert pca_fit(X, 0.99).n_components == 1
    iso = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
    assert pca_fit(iso, 0.8).n_components == 2
    Y = rng.normal(size=(6, 4)) @ rng.normal(size=(4, 9))
    p = pca_fit(Y, 1.0)
    assert p.n_components == 4
    Z = pca_apply(p, Y)
    dY = np.linalg.norm(Y[:, None] - Y[None], axis=2)
    dZ = np.linalg.norm(Z[:, None] - Z[None], axis=2)
    assert np.allclose(dY, dZ)


def test_pca_sign_and_cap():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(5, 30))
    p = pca_fit(X, 0.999)
    assert p.n_components <= 4
    lead = np.abs(p.components).argmax(axis=1)
    assert np.all(p.components[np.arange(p.n_components), lead] > 0)
    p2 = pca_fit(-X, 0.999)
    assert np.allclose(p.components, p2.components)


# -- Elastic Net -----------------------------------------------------------------------


def test_en_ols_limit():
    x = np.linspace(-1, 1, 11)[:, None]
    x = standardize_apply(standardize_fit(x), x)
    m = elastic_net_fit(x, 2.0 * x[:, 0], lam=0.0, l1_ratio=0.5)
    assert m.coef[0] == pytest.approx(2.0, abs=1e-7) and m.intercept == pytest.approx(0.0, abs=1e-12)


def test_en_ridge_closed_form():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(40, 1))
    x = standardize_apply(standardize_fit(x), x)
    y = 1.5 * x[:, 0] + rng.normal(size=40) + 3
    lam = 0.7
    m = elastic_net_fit(x, y, lam=lam, l1_ratio=0.0)
    xc, yc = x[:, 0] - x.mean(), y - y.mean()
    beta = np.mean(xc * yc) / (np.mean(xc * xc) + lam)
    assert m.coef[0] == pytest.approx(beta, abs=1e-6)


def test_en_lambda_max_kills():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(30, 5))
    y = X @ rng.normal(size=5)
    lmax = lambda_max(X, y, 1.0)
    assert np.all(elastic_net_fit(X, y, lmax, 1.0).coef == 0)
    assert np.any(elastic_net_fit(X, y, 0.9 * lmax, 1.0).coef != 0)


def test_en_reports_non_convergence():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(20, 300))
    y = X[:, :10] @ np.ones(10) + rng.normal(size=20)
    m = elastic_net_fit(X, y, 1e-3, 0.5, max_iter=2)
    assert not m.converged and np.all(np.isfinite(m.coef))
    assert kkt_residual(X, y, m, 1e-3, 0.5) > 1e-5


def test_en_converged_flag_is_honest():
    # two sweeps plus the active-set refinement can reach the exact optimum
    rng = np.random.default_rng(4)
    X = rng.normal(size=(30, 20))
    X[:, 1] = X[:, 0] + 1e-3 * rng.normal(size=30)
    y = X[:, 0] + rng.normal(size=30)
    m = elastic_net_fit(X, y, 1e-4, 0.5, max_iter=2)
    assert m.converged == (kkt_residual(X, y, m, 1e-4, 0.5) <= 1e-8)


@given(seeds, st.integers(5, 200), st.integers(1, 200), st.floats(1e-3, 1.0), st.sampled_from([0.1, 0.5, 0.9, 1.0]))
def test_en_kkt(seed, m, p, lam, l1):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(m, p))
    X = standardize_apply(standardize_fit(X), X)
    y = X[:, : min(p, 3)] @ np.ones(min(p, 3)) + rng.normal(size=m)
    model = elastic_net_fit(X, y, lam, l1)
    assert model.converged
    assert kkt_residual(X, y, model, lam, l1) <= 1e-5


def test_en_predict():
    X = np.array([[0.0], [1.0], [2.0]])
    m = elastic_net_fit(X, [1.0, 3.0, 5.0], 0.0, 1.0)
    assert np.allclose(elastic_net_predict(m, [[3.0]]), [7.0], atol=1e-6)


# -- ANOVA F ------------------------------------------------------------------------------


def test_anova_examples():
    X = np.array([[1.0, 0.0, 0.3], [1.0, 0.0, 0.1], [1.0, 1.0, 0.2], [1.0, 1.0, 0.5]])
    y = [0, 0, 1, 1]
    F = anova_f(X, y)
    assert F[0] == 0 and F[1] == np.inf
    idx, _ = anova_f_select(X, y, 1)
    assert list(idx) == [1]
    idx, _ = anova_f_select(X, y, 3)
    assert list(idx) == [0, 1, 2]
    with pytest.raises(DegenerateGroup):
        anova_f(X, [0, 0, 0, 0])


def test_anova_matches_scipy_and_ties():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(20, 6))
    y = np.r_[np.zeros(8), np.ones(12)]
    F = anova_f(X, y)
    ref = [sps.f_oneway(X[y == 0, j], X[y == 1, j]).statistic for j in range(6)]
    assert np.allclose(F, ref, rtol=1e-12)
    X[:, 4] = X[:, 2]
    idx, _ = anova_f_select(X, y, 6)
    order = np.lexsort((np.arange(6), -anova_f(X, y)))
    assert order.tolist().index(2) < order.tolist().index(4)


# -- SVM --------------------------------------------------------------------------------


def test_svm_separable():
    X = np.array([[-1.0], [1.0]])
    m = linear_svm_fit(X, [-1, 1], C=1e3)
    assert np.all(np.sign(linear_svm_decision(m, X)) == [-1, 1])
    assert m.weights[0] == pytest.approx(1.0, abs=1e-3) and m.bias == pytest.approx(0.0, abs=1e-3)


def test_svm_symmetric_duplicates():
    X = np.array([[0.5], [0.5], [-2.0], [2.0]])
    m = linear_svm_fit(X, [1, -1, -1, 1], C=1.0)
    assert abs(linear_svm_decision(m, [[0.0]])[0]) <= 1e-3


def test_svm_deterministic_and_scale_absorbed():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(40, 5))
    y = X[:, 0] + 0.3 * rng.normal(size=40) > 0
    Z = standardize_apply(standardize_fit(X), X)
    a = linear_svm_fit(Z, y, C=1.0, seed=3)
    b = linear_svm_fit(Z, y, C=1.0, seed=3)
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias
    Z2 = standardize_apply(standardize_fit(2 * X), 2 * X)
    c = linear_svm_fit(Z2, y, C=1.0, seed=3)
    assert np.array_equal(linear_svm_decision(a, Z) > 0, linear_svm_decision(c, Z2) > 0)


# -- LDA --------------------------------------------------------------------------------


def test_lda_examples():
    X = np.array([[0.0], [1.0], [4.0], [5.0]])
    y = [0, 0, 1, 1]
    m = lda_fit(X, y, shrinkage=0.0)
    assert m.threshold / m.direction[0] == pytest.approx(2.5)
    rng = np.random.default_rng(7)
    X = rng.normal(size=(30, 3)) * [1, 5, 0.2]
    y = rng.integers(0, 2, 30).astype(bool)
    m = lda_fit(X, y, shrinkage=1.0)
    mu0, mu1 = X[~y].mean(0), X[y].mean(0)
    nearest = np.linalg.norm(X - mu1, axis=1) < np.linalg.norm(X - mu0, axis=1)
    assert np.array_equal(lda_predict(m, X), nearest)
    Xw = rng.normal(size=(10, 50))
    m = lda_fit(Xw, [0] * 5 + [1] * 5, shrinkage=0.1)
    assert np.all(np.isfinite(m.direction))
    with pytest.raises(SingularCovariance):
        lda_fit(Xw, [0] * 5 + [1] * 5, shrinkage=0.0)


# -- metrics ------------------------------------------------------------------------------


def test_auc_examples():
    assert roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert roc_auc([0.5] * 4, [0, 1, 0, 1]) == 0.5
    assert roc_auc([0.9, 0.4, 0.6, 0.1], [1, 1, 0, 0]) == 0.75
    with pytest.raises(SingleClass):
        roc_auc([0.1, 0.2], [1, 1])


@given(seeds, st.integers(2, 200))
def test_auc_brute_force(seed, m):
    rng = np.random.default_rng(seed)
    truth = rng.integers(0, 2, m).astype(bool)
    truth[0], truth[1] = True, False
    scores = rng.integers(0, 5, m).astype(float)
    pos, neg = scores[truth], scores[~truth]
    brute = (np.sum(pos[:, None] > neg[None]) + 0.5 * np.sum(pos[:, None] == neg[None])) / (len(pos) * len(neg))
    assert roc_auc(scores, truth) == brute


def test_binary_and_regression_metrics():
    r = binary_metrics([0.9, 0.2, 0.6, 0.1], [1, 0, 1, 0], [1, 1, 0, 0])
    assert r == {"accuracy": 0.5, "auc": 0.75, "sensitivity": 0.5, "specificity": 0.5}
    with pytest.raises(SingleClass):
        binary_metrics([0.1], [0], [0])
    r = regression_metrics([1.0, 2.0, 3.0], [1.0, 2.0, 4.0])
    assert r["mae"] == pytest.approx(1 / 3) and r["r2"] == pytest.approx(0.5)


# -- CV plans ------------------------------------------------------------------------------


def test_cv_one_of_each_class():
    y = np.array([0, 1] * 5)
    plan = make_cv_plan(y, 5, 5, seed=0)
    for f in plan.outer_folds:
        assert sorted(y[f]) == [0, 1]


def test_cv_determinism_and_partition():
    rng = np.random.default_rng(8)
    y = rng.integers(0, 2, 47)
    a, b = make_cv_plan(y, seed=3), make_cv_plan(y, seed=3)
    assert all(np.array_equal(p, q) for p, q in zip(a.outer_folds, b.outer_folds))
    assert all(np.array_equal(p, q) for fa, fb in zip(a.inner_folds, b.inner_folds) for p, q in zip(fa, fb))
    assert np.array_equal(np.sort(np.concatenate(a.outer_folds)), np.arange(47))
    for o in range(5):
        train, test = a.outer_split(o)
        check_disjoint(train, test)
        assert np.array_equal(np.sort(np.concatenate(a.inner_folds[o])), train)


@given(seeds, st.integers(10, 120), st.integers(2, 6))
def test_cv_stratification(seed, m, k):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 3, m)
    plan = make_cv_plan(y, k, 2, seed=seed)
    for c in np.unique(y):
        share = np.sum(y == c) / k
        for f in plan.outer_folds:
            assert abs(np.sum(y[f] == c) - share) < 1 + 1e-9


def test_cv_regression_strata():
    ages = np.linspace(20, 80, 50)
    assert np.bincount(age_strata(ages)).tolist() == [10] * 5
    plan = make_cv_plan(ages, seed=1, regression=True)
    for f in plan.outer_folds:
        assert np.bincount(age_strata(ages)[f], minlength=5).tolist() == [2] * 5


def test_cv_errors():
    with pytest.raises(TooFewSamples):
        make_cv_plan([0, 1, 0], 5, 5)
    with pytest.raises(LeakageError):
        check_disjoint(np.array([0, 1, 2]), np.array([2, 3]))
