"""Dense symmetric and triangular matrix kernels.

All matrix functions go through a full symmetric eigendecomposition: the
matrices handled here are small and symmetric, and a single decomposition
serves both the logarithm and the exponential.
"""

import numpy as np

from .errors import InvalidInput, NotPositiveDefinite

# relative eigenvalue floor used by positivity checks
EIG_RTOL = 1e-12


def _as_square(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInput(f"{name} must be a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInput(f"{name} has non-finite entries")
    return A


def symmetrize(A):
    """Return (A + A^T) / 2, which is exactly symmetric in floating point."""
    A = np.asarray(A, dtype=float)
    return 0.5 * (A + A.T)


def sym_eig(A):
    """Eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    A : ndarray, shape (n, n)
        Symmetric matrix. Only exact symmetry of the stored values is assumed
        by LAPACK; the lower triangle is read.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Ascending.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal columns, ``A = V diag(w) V^T``.
    """
    A = _as_square(A)
    w, V = np.linalg.eigh(A)
    return w, V


def sym_apply(A, func):
    """Apply a scalar function to the spectrum of a symmetric matrix."""
    w, V = sym_eig(A)
    return symmetrize((V * func(w)) @ V.T)


def _check_spd(w):
    lam_max = max(w[-1], 0.0)
    if w[0] <= EIG_RTOL * lam_max or lam_max == 0.0:
        raise NotPositiveDefinite(
            f"matrix is not positive definite (lambda_min={w[0]:.3e}, lambda_max={lam_max:.3e})"
        )


def sym_logm(A):
    """Matrix logarithm of a symmetric positive-definite matrix.

    Raises
    ------
    NotPositiveDefinite
        If the smallest eigenvalue is below ``1e-12 * lambda_max``.
    """
    w, V = sym_eig(A)
    _check_spd(w)
    return symmetrize((V * np.log(w)) @ V.T)


def sym_expm(S):
    """Matrix exponential of a symmetric matrix."""
    w, V = sym_eig(S)
    return symmetrize((V * np.exp(w)) @ V.T)


def cholesky(A):
    """Lower Cholesky factor with positive diagonal, ``A = L L^T``."""
    A = _as_square(A)
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"Cholesky factorization failed: {exc}") from None


def tri_unit_log(L):
    """Logarithm of a unit lower-triangular matrix.

    ``N = L - I`` is nilpotent, so ``log(I + N) = sum_{k=1}^{n-1} (-1)^{k+1} N^k / k``
    terminates exactly after ``n - 1`` terms. The result is strictly lower
    triangular.
    """
    L = _as_square(L, "L")
    n = L.shape[0]
    N = np.tril(L, -1)
    out = np.zeros_like(N)
    term = np.eye(n)
    for k in range(1, n):
        term = term @ N
        out += ((-1.0) ** (k + 1) / k) * term
    return np.tril(out, -1)


def tri_unit_exp(S):
    """Exponential of a strictly lower-triangular matrix (unit lower-triangular result)."""
    S = _as_square(S, "S")
    n = S.shape[0]
    N = np.tril(S, -1)
    out = np.eye(n)
    term = np.eye(n)
    for k in range(1, n):
        term = term @ N / k
        out += term
    return np.tril(out, -1) + np.eye(n)


def svd_thin(M):
    """Thin SVD ``M = U diag(s) V^T`` of an ``n x k`` matrix with ``k <= n``.

    Returns ``(U, s, V)`` with ``V`` (not ``V^T``) of shape ``(k, k)`` and the
    singular values descending and non-negative.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InvalidInput(f"expected a matrix, got shape {M.shape}")
    if M.shape[1] > M.shape[0]:
        raise InvalidInput(f"svd_thin needs k <= n, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInput("matrix has non-finite entries")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return U, np.maximum(s, 0.0), Vt.T
