"""Univariate two-group ANOVA F-test feature ranking."""

import numpy as np

from ..errors import DegenerateGroup


def anova_f(X, labels):
    """Per-feature F statistic (between-group over within-group mean square).

    A feature with no within-group spread gets ``inf`` if its group means
    differ and ``0`` otherwise.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(labels)
    groups = [X[y == g] for g in np.unique(y)]
    if len(groups) < 2 or any(len(g) == 0 for g in groups):
        raise DegenerateGroup("ANOVA needs at least two non-empty groups")
    m, G = len(X), len(groups)
    grand = X.mean(axis=0)
    ss_between = sum(len(g) * (g.mean(axis=0) - grand) ** 2 for g in groups)
    ss_within = sum(((g - g.mean(axis=0)) ** 2).sum(axis=0) for g in groups)
    ms_between = ss_between / (G - 1)
    if m - G <= 0:
        raise DegenerateGroup("too few samples for a within-group mean square")
    ms_within = ss_within / (m - G)
    scale = np.maximum(np.abs(X).max(axis=0), 1.0)
    flat = ms_within <= 1e-28 * scale ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        F = np.where(flat, np.where(ms_between > 1e-28 * scale ** 2, np.inf, 0.0), ms_between / ms_within)
    return F


def anova_f_select(X, labels, top_k):
    """Indices of the ``top_k`` largest F scores (ties -> lower index) and all scores."""
    F = anova_f(X, labels)
    top_k = min(int(top_k), len(F))
    order = np.lexsort((np.arange(len(F)), -F))
    return np.sort(order[:top_k]), F
