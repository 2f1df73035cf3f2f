"""Nested cross-validated supervised pipelines.

Every fit step (scaler, PCA, feature selection, model) sees only the rows of
the current training split; `check_disjoint` guards each one. Outer folds may
run on several threads; all randomness comes from the plan seed and the fold
indices, so results do not depend on scheduling.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyInput, InvalidInput, SingleClass
from ..grassmann import _stack, classify_many, fisher_fit
from ..graph import adjacency_from_correlation, group_k, isolated_nodes, low_frequency_subspace, subject_spectrum
from ..manifold import Metric, embed_many
from .cv import check_disjoint, make_cv_plan
from .elastic_net import elastic_net_path, elastic_net_predict
from .lda import lda_decision, lda_fit
from .metrics import binary_metrics, regression_metrics, roc_auc
from .preprocessing import pca_apply, pca_fit, standardize_apply, standardize_fit
from .selection import anova_f_select
from .svm import linear_svm_decision, linear_svm_fit

EN_LAMBDAS = tuple(np.logspace(-3, 1, 10))
EN_L1_RATIOS = (0.1, 0.5, 0.9)
SVM_CS = (0.01, 0.1, 1.0, 10.0)
TOP_KS = (100, 500, 1000)


@dataclass
class CVReport:
    """Per-fold metrics, their mean and sd (ddof=1) over outer folds, and notes."""

    representation: str
    folds: list
    aggregate: dict
    warnings: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


def aggregate_folds(folds, keys):
    out = {}
    for key in keys:
        vals = np.array([f["metrics"][key] for f in folds], dtype=float)
        sd = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        out[key] = {"mean": float(vals.mean()), "sd": sd}
    return out


def _map_folds(func, n_folds, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, range(n_folds)))
    return [func(o) for o in range(n_folds)]


def features(cohort, representation):
    """Rows of flat coordinates for every subject under ``representation``."""
    return embed_many(cohort.matrices, Metric.parse(representation))


# -- brain age ---------------------------------------------------------------


def _fit_regressor(X, y, train, lam_grid, l1_ratio, variance_target):
    """Scaler -> PCA -> scaler fitted on ``train``; one Elastic Net per penalty."""
    scaler = standardize_fit(X[train])
    pca = pca_fit(standardize_apply(scaler, X[train]), variance_target)
    Z = pca_apply(pca, standardize_apply(scaler, X[train]))
    # Elastic Net expects unit-variance inputs; the component scores are rescaled too
    zscale = standardize_fit(Z)
    models = elastic_net_path(standardize_apply(zscale, Z), y[train], np.asarray(lam_grid), l1_ratio)

    def transform(rows):
        return standardize_apply(zscale, pca_apply(pca, standardize_apply(scaler, X[rows])))

    return models, transform, pca.n_components


def _brainage_fold(X, y, plan, o, lam_grid, l1_grid, variance_target):
    train, test = plan.outer_split(o)
    check_disjoint(train, test)
    n_inner = len(plan.inner_folds[o])
    mae = np.zeros((len(l1_grid), len(lam_grid)))
    for i in range(n_inner):
        itrain, ival = plan.inner_split(o, i)
        check_disjoint(itrain, ival)
        for a, l1 in enumerate(l1_grid):
            models, transform, _ = _fit_regressor(X, y, itrain, lam_grid, l1, variance_target)
            Zval = transform(ival)
            for b, model in enumerate(models):
                mae[a, b] += np.mean(np.abs(y[ival] - elastic_net_predict(model, Zval))) / n_inner
    # first grid point wins ties (row-major over l1_ratio, then lambda)
    a, b = np.unravel_index(int(np.argmin(mae)), mae.shape)
    models, transform, c = _fit_regressor(X, y, train, lam_grid, l1_grid[a], variance_target)
    model = models[b]
    pred = elastic_net_predict(model, transform(test))
    return {
        "fold": o,
        "n_train": int(len(train)),
        "n_test": int(len(test)),
        "metrics": regression_metrics(y[test], pred),
        "hyperparameters": {"lambda": float(lam_grid[b]), "l1_ratio": float(l1_grid[a]), "n_components": int(c)},
        "converged": bool(model.converged),
    }


def brainage_cv(X, ages, plan, lam_grid=EN_LAMBDAS, l1_grid=EN_L1_RATIOS, variance_target=0.8, threads=1, representation=""):
    """Nested-CV brain-age regression on a feature matrix."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(ages, dtype=float)
    if len(X) != len(y) or len(y) != plan.m:
        raise InvalidInput("features, ages and plan disagree in size")
    folds = _map_folds(
        lambda o: _brainage_fold(X, y, plan, o, tuple(lam_grid), tuple(l1_grid), variance_target),
        len(plan.outer_folds),
        threads,
    )
    warnings = [f"fold {f['fold']}: Elastic Net did not converge" for f in folds if not f["converged"]]
    return CVReport(representation, folds, aggregate_folds(folds, ("mae", "r2")), warnings)


def run_brainage(cohort, representation="offlog", plan=None, lam_grid=EN_LAMBDAS, l1_grid=EN_L1_RATIOS,
                 variance_target=0.8, seed=42, threads=1):
    """Brain-age regression: embed, standardize, PCA, Elastic Net under nested CV."""
    ages = cohort.require_ages()
    if plan is None:
        plan = make_cv_plan(ages, seed=seed, regression=True)
    X = features(cohort, representation)
    report = brainage_cv(X, ages, plan, lam_grid, l1_grid, variance_target, threads, Metric.parse(representation).value)
    report.warnings[:0] = list(cohort.notes)
    return report


# -- classification -------------------------------------------------------------


def classification_grid(p, cs=SVM_CS, top_ks=TOP_KS):
    """``C x top_k`` pairs with ``top_k`` capped at ``p`` (duplicates dropped)."""
    ks = sorted({min(k, p) for k in top_ks})
    return [(c, k) for c in cs for k in ks]


def _fit_classifier(X, y, train, C, top_k, seed):
    selected, _ = anova_f_select(X[train], y[train], top_k)
    scaler = standardize_fit(X[train][:, selected])
    svm = linear_svm_fit(standardize_apply(scaler, X[train][:, selected]), y[train], C=C, seed=seed)

    def decide(rows):
        return linear_svm_decision(svm, standardize_apply(scaler, X[rows][:, selected]))

    return decide, svm


def _fold_auc(scores, truth):
    try:
        return roc_auc(scores, truth)
    except SingleClass:
        return None


def _classification_fold(X, y, plan, o, grid):
    train, test = plan.outer_split(o)
    check_disjoint(train, test)
    n_inner = len(plan.inner_folds[o])
    aucs = np.zeros(len(grid))
    counted = np.zeros(len(grid))
    for i in range(n_inner):
        itrain, ival = plan.inner_split(o, i)
        check_disjoint(itrain, ival)
        for g, (C, top_k) in enumerate(grid):
            decide, _ = _fit_classifier(X, y, itrain, C, top_k, [plan.seed, o, i, g])
            auc = _fold_auc(decide(ival), y[ival])
            if auc is not None:
                aucs[g] += auc
                counted[g] += 1
    if not counted.any():
        raise SingleClass(f"outer fold {o}: no inner validation fold contains both classes")
    mean_auc = np.where(counted > 0, aucs / np.maximum(counted, 1), -np.inf)
    g = int(np.argmax(mean_auc))
    C, top_k = grid[g]
    decide, svm = _fit_classifier(X, y, train, C, top_k, [plan.seed, o, n_inner, g])
    scores = decide(test)
    return {
        "fold": o,
        "n_train": int(len(train)),
        "n_test": int(len(test)),
        "metrics": binary_metrics(scores, scores > 0, y[test]),
        "hyperparameters": {"C": float(C), "top_k": int(top_k), "inner_auc": float(mean_auc[g])},
        "converged": svm.converged,
    }


def classification_cv(X, y, plan, cs=SVM_CS, top_ks=TOP_KS, threads=1, representation=""):
    """Nested-CV ANOVA-F selection, z-scoring and linear SVM; inner selection by AUC."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(bool)
    if len(X) != len(y) or len(y) != plan.m:
        raise InvalidInput("features, labels and plan disagree in size")
    grid = classification_grid(X.shape[1], cs, top_ks)
    folds = _map_folds(lambda o: _classification_fold(X, y, plan, o, grid), len(plan.outer_folds), threads)
    warnings = [f"fold {f['fold']}: SVM did not converge" for f in folds if not f["converged"]]
    keys = ("accuracy", "auc", "sensitivity", "specificity")
    return CVReport(representation, folds, aggregate_folds(folds, keys), warnings)


def run_classification(cohort, representation="offlog", plan=None, cs=SVM_CS, top_ks=TOP_KS, seed=42, threads=1):
    """Patient/control classification from flat connectivity coordinates."""
    y, names = cohort.binary_labels()
    if plan is None:
        plan = make_cv_plan(y, seed=seed)
    X = features(cohort, representation)
    report = classification_cv(X, y, plan, cs, top_ks, threads, Metric.parse(representation).value)
    report.warnings[:0] = list(cohort.notes)
    report.extra["classes"] = {"negative": names[0], "positive": names[1]}
    return report


# -- Grassmann discriminant ---------------------------------------------------------


def _top_decile(scores):
    n_top = max(1, math.ceil(0.1 * len(scores)))
    order = np.lexsort((np.arange(len(scores)), -np.asarray(scores)))
    return order[:n_top]


def _subspace_fold(points, y, train, test, lda_shrinkage):
    check_disjoint(train, test)
    neg = [points[i] for i in train if not y[i]]
    pos = [points[i] for i in train if y[i]]
    model = fisher_fit(neg, pos)
    labels, scores = classify_many(model, [points[i] for i in test])
    pred = labels == "B"
    flat = _stack(points).reshape(len(points), -1)
    lda = lda_fit(flat[train], y[train], shrinkage=lda_shrinkage)
    lda_scores = lda_decision(lda, flat[test])
    return model, scores, pred, lda_scores


def subspace_discriminant_cv(points, y, plan, lda_shrinkage=0.1, threads=1):
    """Nearest-center Grassmann classifier and flattened-basis LDA on identical folds.

    ``points`` are orthonormal ``n x k`` bases; ``y`` is True for the
    positive class. Returns per-fold dictionaries with both methods' test
    scores, predictions and metrics, plus the fitted discriminant models.
    """
    y = np.asarray(y).astype(bool)
    points = list(points)
    if len(points) != len(y) or len(y) != plan.m:
        raise InvalidInput("points, labels and plan disagree in size")

    def one(o):
        train, test = plan.outer_split(o)
        model, scores, pred, lda_scores = _subspace_fold(points, y, train, test, lda_shrinkage)
        return {
            "fold": o,
            "test": test,
            "model": model,
            "scores": scores,
            "predictions": pred,
            "metrics": binary_metrics(scores, pred, y[test]),
            "lda_scores": lda_scores,
            "lda_predictions": lda_scores > 0,
            "lda_metrics": binary_metrics(lda_scores, lda_scores > 0, y[test]),
        }

    return _map_folds(one, len(plan.outer_folds), threads)


def run_grassmann_pipeline(cohort, density=0.20, j_max=None, plan=None, k=None, seed=42, threads=1, lda_shrinkage=0.1):
    """Graph-harmonic subspaces classified by a Fisher-optimal pair of centers.

    Per outer fold the subspace dimension is chosen from the training
    subjects' group-average Laplacians (unless ``k`` is given), each subject
    is mapped to its ``k`` lowest-frequency Laplacian eigenvectors, centers
    are fitted on the training subjects and test subjects go to the nearest
    center. A shrinkage LDA on the flattened bases uses the same folds.
    Region selection frequency is the fraction of folds in which a node is
    among the top decile of the region scores.
    """
    y, names = cohort.binary_labels()
    if plan is None:
        plan = make_cv_plan(y, seed=seed)
    Cs = cohort.matrices
    if not Cs:
        raise EmptyInput("empty cohort")
    n = cohort.n
    spectra = [subject_spectrum(C, density) for C in Cs]
    warnings = list(cohort.notes)
    for sid, C in zip(cohort.ids, Cs):
        iso = isolated_nodes(adjacency_from_correlation(C, density))
        if iso.size:
            warnings.append(f"subject {sid}: isolated node(s) {iso.tolist()} after thresholding")

    def one(o):
        train, test = plan.outer_split(o)
        check_disjoint(train, test)
        if k is None:
            k_fold, per_group = group_k(
                [[Cs[i] for i in train if not y[i]], [Cs[i] for i in train if y[i]]], density, j_max
            )
        else:
            k_fold, per_group = int(k), []
        points = [low_frequency_subspace(s, k_fold) for s in spectra]
        model, scores, pred, lda_scores = _subspace_fold(points, y, train, test, lda_shrinkage)
        return {
            "fold": o,
            "n_train": int(len(train)),
            "n_test": int(len(test)),
            "k": int(k_fold),
            "k_per_group": [int(v) for v in per_group],
            "degenerate": bool(k_fold >= n),
            "metrics": binary_metrics(scores, pred, y[test]),
            "lda_metrics": binary_metrics(lda_scores, lda_scores > 0, y[test]),
            "converged": bool(model.converged),
            "fisher_ratio": float(model.ratio),
            "region_scores": model.region_scores,
        }

    folds = _map_folds(one, len(plan.outer_folds), threads)
    for f in folds:
        if f["degenerate"]:
            warnings.append(f"fold {f['fold']}: k = n = {n}; every subspace is the whole space and all distances are 0")
        if not f["converged"]:
            warnings.append(f"fold {f['fold']}: center optimization hit the iteration limit")
    counts = np.zeros(n)
    for f in folds:
        counts[_top_decile(f.pop("region_scores"))] += 1
    keys = ("accuracy", "auc", "sensitivity", "specificity")
    report = CVReport("grassmann", folds, aggregate_folds(folds, keys), warnings)
    lda_folds = [{"metrics": f["lda_metrics"]} for f in folds]
    report.extra = {
        "classes": {"negative": names[0], "positive": names[1]},
        "lda_aggregate": aggregate_folds(lda_folds, keys),
        "region_selection_frequency": counts / len(folds),
        "degenerate": any(f["degenerate"] for f in folds),
    }
    return report
