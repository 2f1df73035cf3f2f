"""Deterministic stratified nested cross-validation plans."""

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInput, LeakageError, TooFewSamples


@dataclass(frozen=True)
class CVPlan:
    """Outer test folds and, for each outer training set, inner validation folds.

    All indices refer to the full sample order. ``inner_folds[o]`` partitions
    the training set of outer fold ``o``.
    """

    outer_folds: tuple
    inner_folds: tuple
    stratified: bool
    seed: int

    @property
    def m(self):
        return sum(len(f) for f in self.outer_folds)

    def outer_split(self, o):
        test = self.outer_folds[o]
        train = np.sort(np.concatenate([f for i, f in enumerate(self.outer_folds) if i != o]))
        return train, test

    def inner_split(self, o, i):
        folds = self.inner_folds[o]
        val = folds[i]
        train = np.sort(np.concatenate([f for j, f in enumerate(folds) if j != i]))
        return train, val


def check_disjoint(train, test):
    """Raise LeakageError if a fit set and its application set share a row."""
    shared = np.intersect1d(train, test)
    if shared.size:
        raise LeakageError(f"{shared.size} held-out row(s) would enter a fit step, e.g. index {shared[0]}")


def age_strata(ages, n_bins=5):
    """Quantile-bin index (0..n_bins-1) of each age; ties share a bin."""
    ages = np.asarray(ages, dtype=float)
    edges = np.quantile(ages, np.linspace(0, 1, n_bins + 1)[1:-1])
    return np.searchsorted(edges, ages, side="right")


def _deal(indices, strata, k, rng):
    """Round-robin dealing of each shuffled stratum into ``k`` folds.

    The dealing position carries over between strata, so fold sizes differ
    by at most one and every stratum's count per fold by at most one.
    """
    folds = [[] for _ in range(k)]
    pos = 0
    for s in np.unique(strata):
        members = indices[strata == s]
        for idx in members[rng.permutation(len(members))]:
            folds[pos % k].append(idx)
            pos += 1
    return tuple(np.sort(np.asarray(f, dtype=int)) for f in folds)


def _strata(y, regression, indices):
    if regression:
        return age_strata(y[indices])
    return y[indices]


def make_cv_plan(y, k_outer=5, k_inner=5, stratified=True, seed=42, regression=False):
    """Nested k-fold plan stratified by class label or by age quintile.

    Parameters
    ----------
    y : array
        Class labels (classification) or ages (``regression=True``).
    """
    y = np.asarray(y)
    m = len(y)
    if k_outer < 2 or k_inner < 2:
        raise InvalidInput("need at least 2 folds")
    if m < k_outer:
        raise TooFewSamples(f"{m} samples cannot fill {k_outer} outer folds")
    rng = np.random.default_rng(seed)
    everyone = np.arange(m)
    strata = _strata(y, regression, everyone) if stratified else np.zeros(m, dtype=int)
    outer = _deal(everyone, strata, k_outer, rng)
    inner = []
    for o in range(k_outer):
        train = np.sort(np.concatenate([f for i, f in enumerate(outer) if i != o]))
        if len(train) < k_inner:
            raise TooFewSamples(f"outer training set of {len(train)} cannot fill {k_inner} inner folds")
        s = _strata(y, regression, train) if stratified else np.zeros(len(train), dtype=int)
        inner.append(_deal(train, s, k_inner, np.random.default_rng([seed, o])))
    return CVPlan(outer, tuple(inner), bool(stratified), int(seed))
