"""Train-only z-scoring and PCA."""

from dataclasses import dataclass

import numpy as np

SD_FLOOR = 1e-12


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    scale: np.ndarray


def standardize_fit(X):
    """Column means and population standard deviations of the training rows."""
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    # zero-variance columns map to 0
    scale = np.where(sd > SD_FLOOR, sd, np.inf)
    return Scaler(mean, scale)


def standardize_apply(scaler, X):
    return (np.asarray(X, dtype=float) - scaler.mean) / scaler.scale


@dataclass(frozen=True)
class PCAProjector:
    mean: np.ndarray
    components: np.ndarray  # (c, p), orthonormal rows
    explained_variance_ratio: np.ndarray

    @property
    def n_components(self):
        return self.components.shape[0]


def pca_fit(X, variance_target=0.8):
    """Principal axes of the (centered) training rows.

    Keeps the smallest number ``c`` of components whose cumulative explained
    variance reaches ``variance_target``, with ``c <= m - 1``. Each component
    is signed so that its largest-magnitude loading is positive.
    """
    X = np.asarray(X, dtype=float)
    m = X.shape[0]
    mean = X.mean(axis=0)
    _, s, Vt = np.linalg.svd(X - mean, full_matrices=False)
    var = s ** 2
    total = var.sum()
    if total <= 0:
        ratio = np.zeros_like(var)
        c = 1
    else:
        ratio = var / total
        c = int(np.searchsorted(np.cumsum(ratio), variance_target - 1e-12) + 1)
    c = max(1, min(c, max(m - 1, 1), len(s)))
    comps = Vt[:c].copy()
    lead = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(c), lead])
    signs[signs == 0] = 1.0
    comps *= signs[:, None]
    return PCAProjector(mean, comps, ratio[:c])


def pca_apply(projector, X):
    return (np.asarray(X, dtype=float) - projector.mean) @ projector.components.T
