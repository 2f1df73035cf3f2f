"""Two-class linear discriminant analysis with shrinkage."""

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateGroup, SingularCovariance


@dataclass
class LDAModel:
    direction: np.ndarray
    threshold: float


def lda_fit(X, labels, shrinkage=0.1):
    """Fisher direction ``S^{-1} (mu_1 - mu_0)`` with a shrunk pooled covariance.

    ``S = (1 - s) S_pooled + s * tr(S_pooled)/p * I``. The threshold sits at
    the midpoint of the projected class means.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(labels).astype(bool)
    if y.all() or not y.any():
        raise DegenerateGroup("LDA needs both classes in the training data")
    X0, X1 = X[~y], X[y]
    mu0, mu1 = X0.mean(axis=0), X1.mean(axis=0)
    R = np.vstack([X0 - mu0, X1 - mu1])
    dof = max(len(X) - 2, 1)
    S = R.T @ R / dof
    p = X.shape[1]
    S_reg = (1.0 - shrinkage) * S + shrinkage * (np.trace(S) / p) * np.eye(p)
    if shrinkage == 0.0 and np.linalg.matrix_rank(S_reg) < p:
        raise SingularCovariance("pooled covariance is singular; use shrinkage > 0")
    try:
        direction = np.linalg.solve(S_reg, mu1 - mu0)
    except np.linalg.LinAlgError:
        raise SingularCovariance("regularized covariance is singular") from None
    return LDAModel(direction, float(direction @ (mu0 + mu1) / 2.0))


def lda_decision(model, X):
    return np.asarray(X, dtype=float) @ model.direction - model.threshold


def lda_predict(model, X):
    """True (positive class) where the decision value is positive."""
    return lda_decision(model, X) > 0
