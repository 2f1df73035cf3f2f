"""Linear SVM (hinge loss) by dual coordinate descent."""

from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass
class LinearSVM:
    weights: np.ndarray
    bias: float
    epochs_run: int
    converged: bool


@njit(cache=True)
def _dual_cd(X, y, C, orders, tol):
    m, p = X.shape
    w = np.zeros(p + 1)  # last entry multiplies the constant feature
    alpha = np.zeros(m)
    qdiag = np.empty(m)
    for i in range(m):
        qdiag[i] = X[i] @ X[i] + 1.0
    n_epochs = orders.shape[0]
    for ep in range(n_epochs):
        pg_max = -np.inf
        pg_min = np.inf
        for t in range(m):
            i = orders[ep, t]
            g = y[i] * (X[i] @ w[:p] + w[p]) - 1.0
            if alpha[i] == 0.0:
                pg = min(g, 0.0)
            elif alpha[i] == C:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg > pg_max:
                pg_max = pg
            if pg < pg_min:
                pg_min = pg
            if abs(pg) > 1e-12:
                old = alpha[i]
                new = min(max(old - g / qdiag[i], 0.0), C)
                alpha[i] = new
                step = (new - old) * y[i]
                for j in range(p):
                    w[j] += step * X[i, j]
                w[p] += step
        if pg_max - pg_min <= tol:
            return w, ep + 1, True
    return w, n_epochs, False


def linear_svm_fit(X, labels, C=1.0, epochs=1000, seed=0, tol=1e-4):
    """Minimize ``||w||^2 / 2 + C sum_i max(0, 1 - y_i (w.x_i + b))``.

    ``labels`` are +1/-1 (booleans are mapped True -> +1). The bias is
    handled as a weight on a constant feature, so it is regularized like the
    other weights. The sample visiting order of every epoch is drawn from
    ``seed`` before optimization starts, which makes the fit deterministic.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(labels)
    y = np.where(y.astype(bool) if y.dtype == bool else y > 0, 1.0, -1.0)
    rng = np.random.default_rng(seed)
    orders = np.argsort(rng.random((epochs, X.shape[0])), axis=1)
    w, ran, ok = _dual_cd(X, y, float(C), orders, tol)
    return LinearSVM(w[:-1].copy(), float(w[-1]), int(ran), bool(ok))


def linear_svm_decision(model, X):
    return np.asarray(X, dtype=float) @ model.weights + model.bias
