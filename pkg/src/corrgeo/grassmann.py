"""Grassmannian geometry and Fisher-ratio subspace discriminant analysis.

A point of Gr(k, n) is stored as an ``n x k`` matrix with orthonormal
columns; any ``U Q`` with ``Q`` orthogonal represents the same point and every
quantity computed here is invariant to that choice.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CutLocus, DimensionMismatch, EmptyInput, InvalidInput, NoConvergence

ORTHO_TOL = 1e-8


def as_point(U):
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if U.ndim != 2 or U.shape[1] > U.shape[0]:
        raise InvalidInput(f"Grassmann point must be n x k with k <= n, got {U.shape}")
    if not np.all(np.isfinite(U)):
        raise InvalidInput("Grassmann point has non-finite entries")
    return U


def orthonormalize(X):
    """Orthonormal basis of span(X) close to X (QR with positive diag(R))."""
    Q, R = np.linalg.qr(X)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def random_point(n, k, rng):
    return orthonormalize(rng.standard_normal((n, k)))


def _stack(points):
    arr = np.stack([as_point(U) for U in points])
    return arr


def _check_pair(U, V):
    U, V = as_point(U), as_point(V)
    if U.shape != V.shape:
        raise DimensionMismatch(f"Grassmann points differ in shape: {U.shape} vs {V.shape}")
    return U, V


def _angles_batch(X, Ys):
    """Principal angles between ``X`` (n, k) and each of ``Ys`` (m, n, k), ascending.

    Cosines come from the SVD of ``X^T Y``; angles whose cosine exceeds
    ``1/sqrt(2)`` are taken from the sines (SVD of ``Y - X X^T Y``) instead,
    since arccos loses half the digits near zero angle.
    """
    M = np.einsum("ni,mnj->mij", X, Ys)
    cos = np.linalg.svd(M, compute_uv=False)
    resid = Ys - np.einsum("ni,mij->mnj", X, M)
    sin = np.linalg.svd(resid, compute_uv=False)[:, ::-1]
    cos = np.clip(cos, 0.0, 1.0)
    sin = np.clip(sin, 0.0, 1.0)
    return np.where(cos ** 2 >= 0.5, np.arcsin(sin), np.arccos(cos))


def principal_angles(U, V):
    """Principal angles between span(U) and span(V), ascending in [0, pi/2]."""
    U, V = _check_pair(U, V)
    return _angles_batch(U, V[None])[0]


def grassmann_dist(U, V):
    """Geodesic distance ``sqrt(sum theta_l^2)``."""
    return float(np.sqrt(np.sum(principal_angles(U, V) ** 2)))


def sq_dists(X, points):
    """Squared geodesic distances from ``X`` to every point."""
    X = as_point(X)
    Ys = _stack(points) if not isinstance(points, np.ndarray) or points.ndim != 3 else points
    if Ys.shape[1:] != X.shape:
        raise DimensionMismatch(f"points of shape {Ys.shape[1:]} vs {X.shape}")
    return np.sum(_angles_batch(X, Ys) ** 2, axis=1)


def _log_batch(X, Ys, cut_tol):
    M = np.einsum("ni,mnj->mij", X, Ys)
    sv = np.linalg.svd(M, compute_uv=False)
    if np.any(sv[:, -1] <= cut_tol):
        worst = int(np.argmin(sv[:, -1]))
        raise CutLocus(
            f"point {worst} is (nearly) orthogonal to the base point "
            f"(smallest cosine {sv[worst, -1]:.3e}); logarithm undefined"
        )
    resid = Ys - np.einsum("ni,mij->mnj", X, M)
    # A = resid M^{-1}  <=>  M^T A^T = resid^T
    A = np.swapaxes(np.linalg.solve(np.swapaxes(M, 1, 2), np.swapaxes(resid, 1, 2)), 1, 2)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    return np.einsum("mnk,mk,mkj->mnj", U, np.arctan(s), Vt)


def grassmann_log(X, Y, cut_tol=1e-10):
    """Riemannian logarithm: tangent ``H`` at ``X`` with ``Exp_X(H) = [Y]``.

    With ``(I - X X^T) Y (X^T Y)^{-1} = U S V^T`` (thin SVD),
    ``H = U atan(S) V^T``. The singular values of ``H`` are the principal
    angles between the two subspaces.

    Raises
    ------
    CutLocus
        If a singular value of ``X^T Y`` is <= ``cut_tol`` (some principal angle
        is pi/2 and the geodesic is not unique).
    """
    X, Y = _check_pair(X, Y)
    return _log_batch(X, Y[None], cut_tol)[0]


def grassmann_exp(X, H):
    """Riemannian exponential ``X V cos(S) V^T + U sin(S) V^T`` for ``H = U S V^T``."""
    X = as_point(X)
    H = np.asarray(H, dtype=float)
    if H.shape != X.shape:
        raise DimensionMismatch(f"tangent shape {H.shape} does not match point {X.shape}")
    if np.max(np.abs(X.T @ H), initial=0.0) > ORTHO_TOL * max(1.0, np.abs(H).max()):
        raise InvalidInput("tangent vector must satisfy X^T H = 0")
    U, s, Vt = np.linalg.svd(H, full_matrices=False)
    Y = (X @ Vt.T) * np.cos(s) @ Vt + (U * np.sin(s)) @ Vt
    return orthonormalize(Y)


def tangent_mean(X, points, cut_tol=1e-10):
    """Average of ``Log_X`` over ``points`` (minus half the gradient of the mean squared distance)."""
    return _log_batch(as_point(X), points, cut_tol).mean(axis=0)


def karcher_mean(points, tol=1e-9, max_iter=200, cut_tol=1e-6):
    """Frechet mean on the Grassmannian by Karcher flow.

    Starts at the first sample and iterates ``C <- Exp_C(mean_i Log_C(U_i))``
    until the mean tangent has Frobenius norm <= ``tol``.

    Raises
    ------
    NoConvergence
        After ``max_iter`` updates (``.result`` holds the last iterate).
    CutLocus
        If a sample is within ``cut_tol`` (in cosine) of orthogonal to the
        current iterate, where the mean is not well defined.
    """
    points = list(points)
    if not points:
        raise EmptyInput("karcher_mean needs at least one point")
    Ys = _stack(points)
    if len({p.shape for p in Ys}) != 1:
        raise DimensionMismatch("points have different shapes")
    C = Ys[0].copy()
    if len(Ys) == 1:
        return C
    grad_norm = np.inf
    for _ in range(max_iter):
        T = tangent_mean(C, Ys, cut_tol)
        grad_norm = np.linalg.norm(T)
        if grad_norm <= tol:
            return C
        C = grassmann_exp(C, T)
    T = tangent_mean(C, Ys, cut_tol)
    if np.linalg.norm(T) <= tol:
        return C
    raise NoConvergence(
        f"Karcher flow did not converge in {max_iter} iterations (gradient norm {grad_norm:.3e})",
        residual=float(grad_norm),
        result=C,
    )


@dataclass
class DiscriminantModel:
    """Two optimized class centers on Gr(k, n).

    ``objective_trace`` holds ``J = -D_B / (D_W + eps)`` after initialization
    and after every accepted step (non-increasing).
    """

    center_a: np.ndarray
    center_b: np.ndarray
    k: int
    epsilon: float
    objective_trace: list = field(default_factory=list)
    region_scores: np.ndarray = None
    converged: bool = True

    @property
    def n(self):
        return self.center_a.shape[0]

    @property
    def ratio(self):
        return -self.objective_trace[-1]


def _fisher_terms(a, b, Ya, Yb):
    d_b = float(np.sum(_angles_batch(a, b[None]) ** 2))
    d_w = float(np.sum(_angles_batch(a, Ya) ** 2) + np.sum(_angles_batch(b, Yb) ** 2))
    return d_b, d_w


def fisher_fit(group_a, group_b, epsilon=1e-8, step=0.5, max_iter=500, rtol=1e-8, max_halvings=30):
    """Fit two subspace centers maximizing ``D_B / (D_W + eps)``.

    ``D_B`` is the squared distance between the centers and ``D_W`` the sum
    of squared distances of each sample to its own class center. Centers
    start at the per-class Karcher means and move by Riemannian gradient
    ascent (``grad_C d^2(U, C) = -2 Log_C(U)``) on ``log`` of the ratio. A
    step is accepted only if the ratio increases; otherwise the step length is
    halved (at most ``max_halvings`` times). Iteration stops when the
    relative change of the ratio is <= ``rtol`` or after ``max_iter`` steps;
    in the latter case the best centers are returned with ``converged=False``.
    """
    group_a, group_b = list(group_a), list(group_b)
    if not group_a or not group_b:
        raise EmptyInput("both groups need at least one subspace")
    Ya, Yb = _stack(group_a), _stack(group_b)
    if Ya.shape[1:] != Yb.shape[1:]:
        raise DimensionMismatch(f"groups live on different Grassmannians: {Ya.shape[1:]} vs {Yb.shape[1:]}")
    n, k = Ya.shape[1:]
    if k == n:
        # Gr(n, n) is a single point: every center is the whole space
        eye = np.eye(n)
        model = DiscriminantModel(eye, eye.copy(), k, epsilon, [-0.0], converged=True)
        model.region_scores = region_importance(model)
        return model
    a, b = karcher_mean(Ya), karcher_mean(Yb)
    d_b, d_w = _fisher_terms(a, b, Ya, Yb)
    ratio = d_b / (d_w + epsilon)
    trace = [-ratio]
    eta = step
    converged = False
    for _ in range(max_iter):
        if d_b <= 0.0:
            # identical centers: no direction increases the ratio at first order
            converged = True
            break
        w = d_w + epsilon
        log_ab = grassmann_log(a, b)
        log_ba = grassmann_log(b, a)
        # gradients of log(D_B) - log(D_W + eps); each d^2 contributes -2 Log
        g_a = (-2.0 * log_ab) / d_b - (-2.0 * len(Ya) * tangent_mean(a, Ya)) / w
        g_b = (-2.0 * log_ba) / d_b - (-2.0 * len(Yb) * tangent_mean(b, Yb)) / w
        # dividing by a tiny D_W magnifies round-off off the tangent space
        g_a -= a @ (a.T @ g_a)
        g_b -= b @ (b.T @ g_b)
        accepted = False
        for _ in range(max_halvings + 1):
            a_new = grassmann_exp(a, eta * g_a)
            b_new = grassmann_exp(b, eta * g_b)
            nb, nw = _fisher_terms(a_new, b_new, Ya, Yb)
            new_ratio = nb / (nw + epsilon)
            if new_ratio > ratio:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            converged = True
            break
        change = (new_ratio - ratio) / abs(ratio) if ratio != 0 else np.inf
        a, b, d_b, d_w, ratio = a_new, b_new, nb, nw, new_ratio
        trace.append(-ratio)
        eta = min(2.0 * eta, step)
        if change <= rtol:
            converged = True
            break
    model = DiscriminantModel(a, b, k, epsilon, trace, converged=converged)
    model.region_scores = region_importance(model)
    return model


def classify_nearest_center(model, U):
    """Nearest-center label and signed decision value.

    Returns ``("A", score)`` iff ``d^2(U, center_a) < d^2(U, center_b)``, else
    ``("B", score)``, with ``score = d^2(U, center_a) - d^2(U, center_b)``.
    """
    U = as_point(U)
    if U.shape != model.center_a.shape:
        raise DimensionMismatch(f"point shape {U.shape} vs model {model.center_a.shape}")
    da = float(np.sum(_angles_batch(model.center_a, U[None]) ** 2))
    db = float(np.sum(_angles_batch(model.center_b, U[None]) ** 2))
    score = da - db
    return ("A" if da < db else "B"), score


def classify_many(model, points):
    Ys = _stack(points)
    if Ys.shape[1:] != model.center_a.shape:
        raise DimensionMismatch(f"point shape {Ys.shape[1:]} vs model {model.center_a.shape}")
    da = np.sum(_angles_batch(model.center_a, Ys) ** 2, axis=1)
    db = np.sum(_angles_batch(model.center_b, Ys) ** 2, axis=1)
    labels = np.where(da < db, "A", "B")
    return labels, da - db


def region_importance(model):
    """Per-node weight: row norms of the difference of the centers' projectors.

    Invariant to the basis chosen for either center.
    """
    Pa = model.center_a @ model.center_a.T
    Pb = model.center_b @ model.center_b.T
    return np.linalg.norm(Pa - Pb, axis=1)
