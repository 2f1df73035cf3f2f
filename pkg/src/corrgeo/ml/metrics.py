"""Binary classification and regression metrics."""

import numpy as np

from ..errors import EmptyInput, SingleClass


def _average_ranks(x):
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def roc_auc(scores, truth):
    """Area under the ROC curve via the Mann-Whitney rank statistic (ties count 1/2)."""
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth).astype(bool)
    n_pos, n_neg = truth.sum(), (~truth).sum()
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both classes")
    ranks = _average_ranks(scores)
    return float((ranks[truth].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def binary_metrics(scores, predictions, truth):
    """Accuracy, AUC-ROC, sensitivity (positive recall), specificity (negative recall)."""
    truth = np.asarray(truth).astype(bool)
    pred = np.asarray(predictions).astype(bool)
    if len(truth) == 0:
        raise EmptyInput("no samples")
    if truth.all() or not truth.any():
        raise SingleClass("metrics need both classes present")
    return {
        "accuracy": float(np.mean(pred == truth)),
        "auc": roc_auc(scores, truth),
        "sensitivity": float(np.mean(pred[truth])),
        "specificity": float(np.mean(~pred[~truth])),
    }


def regression_metrics(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    resid = y_true - y_pred
    ss_tot = np.sum((y_true - y_true.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 0.0
    return {"mae": float(np.mean(np.abs(resid))), "r2": float(r2)}
