"""Flat Riemannian geometries on full-rank correlation matrices.

Three pullback geometries are provided, each a global chart onto a vector
space in which distances, geodesics and Frechet means are Euclidean:

* ``offlog``  -- ``C -> Off(log C)``, symmetric hollow matrices. Permutation
  equivariant, and an abelian Lie group under the pulled-back addition.
* ``ecm``     -- Euclidean-Cholesky: strict lower part of the row-normalised
  Cholesky factor ``Diag(chol C)^{-1} chol C`` (unit diagonal).
* ``lec``     -- log-Euclidean Cholesky: matrix log of that unit triangular
  factor.

``euclidean`` is the raw-correlation baseline (upper-triangular entries).

Distance convention: hollow symmetric coordinates (``offlog``/``euclidean``)
count both triangles, so the distance equals the Frobenius norm of the full
matrix difference, ``sqrt(2) * ||upper diff||``. Triangular coordinates
(``ecm``/``lec``) are counted once.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DiagonalNotUnit,
    DimensionMismatch,
    EmptyInput,
    InvalidInput,
    NoConvergence,
    NotPositiveDefinite,
)
from .linalg import (
    _as_square,
    cholesky,
    sym_eig,
    sym_logm,
    symmetrize,
    tri_unit_exp,
    tri_unit_log,
)

SHRINK_GRID = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1)
SYMMETRY_TOL = 1e-8
DIAG_TOL = 1e-6
DIAG_SILENT = 1e-12
RANK_DEFICIENT_EIG = 1e-10
SHRINK_TARGET_EIG = 1e-8


class Metric(str, Enum):
    OFFLOG = "offlog"
    ECM = "ecm"
    LEC = "lec"
    EUCLIDEAN = "euclidean"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower().replace("-", "").replace("_", ""))
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise InvalidInput(f"unknown metric {value!r} (choose from {choices})") from None

    @property
    def coord_scale(self):
        """Factor turning the Euclidean norm of a coordinate difference into a distance."""
        return np.sqrt(2.0) if self in (Metric.OFFLOG, Metric.EUCLIDEAN) else 1.0


@dataclass(frozen=True)
class FlatCoords:
    """Coordinates of a correlation matrix in the flat chart of ``metric``."""

    metric: Metric
    n: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.n * (self.n - 1) // 2,):
            raise DimensionMismatch(
                f"{self.metric.value} coordinates for n={self.n} need length "
                f"{self.n * (self.n - 1) // 2}, got shape {values.shape}"
            )
        object.__setattr__(self, "values", values)


def n_coords(n):
    return n * (n - 1) // 2


def dim_from_coords(p):
    """Recover ``n`` from ``p = n (n - 1) / 2``."""
    n = int(round((1 + np.sqrt(1 + 8 * p)) / 2))
    if n * (n - 1) // 2 != p:
        raise DimensionMismatch(f"{p} is not a triangular number of coordinates")
    return n


def _upper(A):
    return A[np.triu_indices(A.shape[0], 1)]


def _lower(A):
    return A[np.tril_indices(A.shape[0], -1)]


def hollow_from_upper(values, n):
    """Symmetric zero-diagonal matrix from its strict upper triangle (row-major)."""
    S = np.zeros((n, n))
    S[np.triu_indices(n, 1)] = values
    return S + S.T


def validate_or_shrink(A, shrink_allowed=False, notes=None):
    """Validate a correlation matrix, optionally repairing rank deficiency.

    Small asymmetries (<= 1e-8) are symmetrised and a diagonal within 1e-6 of
    one is renormalised to exactly one (silently if within 1e-12). If the
    smallest eigenvalue is <= 1e-10 and ``shrink_allowed``, the matrix is
    shrunk towards the identity,
    ``(1 - g) A + g I``, using the smallest ``g`` in ``1e-6, 1e-5, ..., 1e-1``
    that lifts the smallest eigenvalue to at least 1e-8.

    Parameters
    ----------
    A : array_like, shape (n, n)
    shrink_allowed : bool
    notes : list of str, optional
        Human-readable repair messages are appended here.

    Returns
    -------
    C : ndarray, shape (n, n)
    gamma : float
        Shrinkage weight actually applied (0.0 when none).
    """
    A = _as_square(A)
    if notes is None:
        notes = []
    asym = np.max(np.abs(A - A.T)) if A.size else 0.0
    if asym > SYMMETRY_TOL:
        raise InvalidInput(f"matrix is not symmetric (max |A - A^T| = {asym:.3e})")
    if asym > 0:
        notes.append(f"symmetrized (max asymmetry {asym:.3e})")
    C = symmetrize(A)
    diag = np.diag(C)
    dev = np.max(np.abs(diag - 1.0))
    # inclusive bound: a diagonal of exactly 1 - 1e-6 is accepted
    if dev > DIAG_TOL * (1 + 1e-9):
        raise DiagonalNotUnit(f"diagonal deviates from 1 by {dev:.3e}")
    # rounding-level deviations are fixed silently below
    if dev > DIAG_SILENT:
        if np.any(diag <= 0):
            raise DiagonalNotUnit("diagonal entries must be positive")
        s = 1.0 / np.sqrt(diag)
        C = symmetrize(C * s[:, None] * s[None, :])
        notes.append(f"diagonal renormalized (max deviation {dev:.3e})")
    np.fill_diagonal(C, 1.0)

    lam_min = np.linalg.eigvalsh(C)[0]
    if lam_min > RANK_DEFICIENT_EIG:
        return C, 0.0
    if not shrink_allowed:
        raise NotPositiveDefinite(
            f"correlation matrix is not full rank (lambda_min={lam_min:.3e}); enable shrinkage"
        )
    eye = np.eye(C.shape[0])
    for gamma in SHRINK_GRID:
        shrunk = (1.0 - gamma) * C + gamma * eye
        np.fill_diagonal(shrunk, 1.0)
        if np.linalg.eigvalsh(shrunk)[0] >= SHRINK_TARGET_EIG:
            notes.append(f"shrunk towards identity with gamma={gamma:g} (lambda_min was {lam_min:.3e})")
            return shrunk, gamma
    raise NotPositiveDefinite(
        f"shrinkage up to gamma={SHRINK_GRID[-1]:g} cannot repair lambda_min={lam_min:.3e}"
    )


def _check_hollow(S):
    S = _as_square(S, "S")
    if np.max(np.abs(S - S.T), initial=0.0) > SYMMETRY_TOL:
        raise InvalidInput("hollow matrix must be symmetric")
    S = symmetrize(S)
    np.fill_diagonal(S, 0.0)
    return S


def log_off(C):
    """Off-log map ``Off(log C)``: the hollow part of the matrix logarithm."""
    S = sym_logm(_as_square(C, "C"))
    np.fill_diagonal(S, 0.0)
    return S


def _exp_diag(A):
    """Diagonal of exp(A) plus what is needed for its derivative in the diagonal."""
    w, V = sym_eig(A)
    ew = np.exp(w)
    diag = (V * V) @ ew
    return diag, (w, ew, V)


def _divided_differences(w, ew):
    dw = w[:, None] - w[None, :]
    close = np.abs(dw) < 1e-12
    safe = np.where(close, 1.0, dw)
    return np.where(close, np.maximum(ew[:, None], ew[None, :]), ew[None, :] * np.expm1(dw) / safe)


def _diag_jvp(V, phi, v):
    """``diag(D exp(A)[Diag(v)])`` via the Daleckii-Krein formula."""
    X = phi * (V.T @ (v[:, None] * V))
    return np.sum((V @ X) * V, axis=1)


def _newton_direction(decomp, rhs, dense_max=64, cg_iter=50):
    """Solve ``J s = rhs`` where ``J`` is the (symmetric PSD) Jacobian of diag(exp)."""
    w, ew, V = decomp
    phi = _divided_differences(w, ew)
    n = len(w)
    if n <= dense_max:
        J = np.column_stack([_diag_jvp(V, phi, e) for e in np.eye(n)])
        return np.linalg.solve(J, rhs)
    # conjugate gradients, matrix-free
    s = np.zeros(n)
    r = rhs.copy()
    p = r.copy()
    rr = r @ r
    stop = 1e-14 * np.sqrt(rr)
    for _ in range(cg_iter):
        Jp = _diag_jvp(V, phi, p)
        alpha = rr / (p @ Jp)
        s += alpha * p
        r -= alpha * Jp
        rr_new = r @ r
        if np.sqrt(rr_new) <= stop:
            break
        p = r + (rr_new / rr) * p
        rr = rr_new
    return s


def solve_diag_correction(S, tol=1e-12, max_iter=100, method="newton"):
    """Diagonal ``d`` with ``diag(exp(S + Diag(d))) = 1``.

    ``method="fixed-point"`` iterates ``d <- d - log(diag(exp(S + Diag(d))))``
    from ``d = 0``. That map is a contraction but converges slowly once the
    entries of ``S`` are O(1) and ``n`` grows, so the default ``"newton"``
    solves the same equation ``log(diag(exp(S + Diag(d)))) = 0`` by Newton's
    method with the exact Jacobian, also starting from ``d = 0``. A Newton
    step that does not reduce the residual is replaced by the fixed-point
    step, so the iteration never does worse than the plain fixed point.

    Raises
    ------
    NoConvergence
        After ``max_iter`` iterations; carries the residual and the last ``d``.
    """
    if method not in ("newton", "fixed-point"):
        raise InvalidInput(f"unknown method {method!r}")
    S = _check_hollow(S)
    d = np.zeros(S.shape[0])
    diag, decomp = _exp_diag(S)
    resid = np.max(np.abs(diag - 1.0))
    for _ in range(max_iter):
        if resid <= tol:
            return d
        F = np.log(diag)
        fixed = d - F
        trial = None
        if method == "newton":
            with np.errstate(all="ignore"):
                step = _newton_direction(decomp, diag * F)
                # keep exp() in range; the fixed point handles large corrections
                big = np.max(np.abs(step))
                if np.all(np.isfinite(step)) and big <= 5.0:
                    cand = d - step
                    cand_diag, cand_decomp = _exp_diag(S + np.diag(cand))
                    cand_resid = np.max(np.abs(cand_diag - 1.0))
                    if np.isfinite(cand_resid) and cand_resid < resid:
                        trial = (cand, cand_diag, cand_decomp, cand_resid)
        if trial is None:
            fixed_diag, fixed_decomp = _exp_diag(S + np.diag(fixed))
            trial = (fixed, fixed_diag, fixed_decomp, np.max(np.abs(fixed_diag - 1.0)))
        d, diag, decomp, resid = trial
    if resid <= tol:
        return d
    raise NoConvergence(
        f"diagonal correction did not converge in {max_iter} iterations (residual {resid:.3e})",
        residual=resid,
        result=d,
    )


def exp_off(S, tol=1e-12, max_iter=100):
    """Inverse of `log_off`: ``exp(S + Diag(d(S)))``, a correlation matrix.

    Only the off-diagonal part of ``S`` matters; its diagonal is ignored.
    """
    S = _check_hollow(S)
    d = solve_diag_correction(S, tol=tol, max_iter=max_iter)
    w, V = sym_eig(S + np.diag(d))
    return symmetrize((V * np.exp(w)) @ V.T)


def _unit_cholesky(C):
    L = cholesky(C)
    return L / np.diag(L)[:, None]


def embed(C, metric):
    """Flat coordinates of ``C`` under ``metric``.

    Examples
    --------
    >>> C = np.array([[1.0, 0.6], [0.6, 1.0]])
    >>> embed(C, "ecm").values
    array([0.75])
    """
    metric = Metric.parse(metric)
    C = _as_square(C, "C")
    n = C.shape[0]
    if metric is Metric.OFFLOG:
        values = _upper(log_off(C))
    elif metric is Metric.EUCLIDEAN:
        values = _upper(symmetrize(C))
    elif metric is Metric.ECM:
        values = _lower(_unit_cholesky(C))
    else:
        values = _lower(tri_unit_log(_unit_cholesky(C)))
    return FlatCoords(metric, n, values)


def _from_unit_triangular(Lt):
    L = Lt / np.linalg.norm(Lt, axis=1)[:, None]
    C = symmetrize(L @ L.T)
    np.fill_diagonal(C, 1.0)
    return C


def unembed(x):
    """Correlation matrix with flat coordinates ``x`` (inverse of `embed`)."""
    if not isinstance(x, FlatCoords):
        raise InvalidInput("unembed expects FlatCoords")
    if not np.all(np.isfinite(x.values)):
        raise InvalidInput("coordinates must be finite")
    n = x.n
    if x.metric is Metric.OFFLOG:
        return exp_off(hollow_from_upper(x.values, n))
    if x.metric is Metric.EUCLIDEAN:
        A = hollow_from_upper(x.values, n) + np.eye(n)
        return validate_or_shrink(A, shrink_allowed=False)[0]
    T = np.zeros((n, n))
    T[np.tril_indices(n, -1)] = x.values
    if x.metric is Metric.ECM:
        Lt = T + np.eye(n)
    else:
        Lt = tri_unit_exp(T)
    return _from_unit_triangular(Lt)


def embed_many(Cs, metric):
    """Stack the flat coordinates of several matrices into an ``(m, p)`` array."""
    metric = Metric.parse(metric)
    Cs = list(Cs)
    if not Cs:
        raise EmptyInput("no matrices given")
    rows = [embed(C, metric).values for C in Cs]
    if len({r.shape for r in rows}) != 1:
        raise DimensionMismatch("matrices have different dimensions")
    return np.vstack(rows)


def _same_n(C1, C2):
    C1 = np.asarray(C1, dtype=float)
    C2 = np.asarray(C2, dtype=float)
    if C1.shape != C2.shape:
        raise DimensionMismatch(f"shapes differ: {C1.shape} vs {C2.shape}")
    return C1, C2


def dist(C1, C2, metric):
    """Geodesic distance between two correlation matrices."""
    metric = Metric.parse(metric)
    C1, C2 = _same_n(C1, C2)
    diff = embed(C1, metric).values - embed(C2, metric).values
    return float(metric.coord_scale * np.linalg.norm(diff))


def _no_euclid(metric, what):
    if metric is Metric.EUCLIDEAN:
        raise InvalidInput(
            f"{what} is not defined for the euclidean baseline (use euclidean_mean for averages)"
        )


def geodesic(C1, C2, t, metric):
    """Point at time ``t`` on the geodesic from ``C1`` (t=0) to ``C2`` (t=1)."""
    metric = Metric.parse(metric)
    _no_euclid(metric, "geodesic")
    C1, C2 = _same_n(C1, C2)
    x1, x2 = embed(C1, metric), embed(C2, metric)
    return unembed(FlatCoords(metric, x1.n, (1.0 - t) * x1.values + t * x2.values))


def frechet_mean(Cs, metric):
    """Frechet mean: the arithmetic mean taken in the flat chart, mapped back."""
    metric = Metric.parse(metric)
    _no_euclid(metric, "frechet_mean")
    X = embed_many(Cs, metric)
    n = dim_from_coords(X.shape[1])
    return unembed(FlatCoords(metric, n, X.mean(axis=0)))


def euclidean_mean(Cs):
    """Element-wise average (baseline; may leave the manifold for other data)."""
    Cs = [np.asarray(C, dtype=float) for C in Cs]
    if not Cs:
        raise EmptyInput("no matrices given")
    if len({C.shape for C in Cs}) != 1:
        raise DimensionMismatch("matrices have different dimensions")
    return symmetrize(np.mean(Cs, axis=0))


def star_product(C1, C2):
    """Abelian group law ``Exp_off(Log_off C1 + Log_off C2)``."""
    C1, C2 = _same_n(C1, C2)
    return exp_off(log_off(C1) + log_off(C2))


def star_inverse(C):
    return exp_off(-log_off(C))


def tangent_at_identity(C, metric):
    """Tangent vector at the identity.

    For every supported geometry the chart is global and centred at the
    identity (which maps to zero), so this is the flat embedding itself.
    """
    return embed(C, metric)
