"""Connectivity graphs, normalized Laplacian harmonics and gap-spectrum selection."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, InvalidInput
from .linalg import _as_square, sym_eig, symmetrize

SPECTRUM_SLACK = 1e-10


@dataclass(frozen=True)
class LaplacianSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self):
        return len(self.eigenvalues)


def adjacency_from_correlation(C, density=0.20):
    """Proportionally thresholded, non-negative weighted adjacency.

    Negative correlations are set to zero, then only the
    ``ceil(density * n (n - 1) / 2)`` strongest positive edges are kept. Edges
    tied with the weakest kept edge are all kept, so the count may be
    slightly exceeded.
    """
    C = _as_square(C, "C")
    if not 0.0 < density <= 1.0:
        raise InvalidInput(f"density must be in (0, 1], got {density}")
    n = C.shape[0]
    W = np.clip(symmetrize(C), 0.0, None)
    np.fill_diagonal(W, 0.0)
    iu = np.triu_indices(n, 1)
    weights = W[iu]
    n_keep = math.ceil(density * len(weights) - 1e-9)
    positive = np.sort(weights[weights > 0])[::-1]
    if n_keep < len(positive):
        cutoff = positive[n_keep - 1] if n_keep > 0 else np.inf
        weights = np.where(weights >= cutoff, weights, 0.0)
    out = np.zeros((n, n))
    out[iu] = weights
    return out + out.T


def normalized_laplacian(W):
    """``I - D^{-1/2} W D^{-1/2}``; rows and columns of isolated nodes are zero."""
    W = _as_square(W, "W")
    if np.any(W < 0):
        raise InvalidInput("graph weights must be non-negative")
    deg = W.sum(axis=1)
    connected = deg > 0
    inv_sqrt = np.zeros_like(deg)
    inv_sqrt[connected] = 1.0 / np.sqrt(deg[connected])
    L = -(inv_sqrt[:, None] * W * inv_sqrt[None, :])
    L[np.diag_indices_from(L)] = connected.astype(float)
    return symmetrize(L)


def laplacian_spectrum(L):
    w, V = sym_eig(L)
    # eigenvalues of a normalized Laplacian live in [0, 2]; clamp rounding
    return LaplacianSpectrum(np.clip(w, 0.0, 2.0), V)


def gap_spectrum(eigenvalues):
    """``g_j = lambda_{j+1} - lambda_j`` for ``j = 1 .. n-1`` (0-based array)."""
    return np.diff(np.asarray(eigenvalues, dtype=float))


def default_j_max(n):
    return min(30, n - 1)


def gap_spectrum_select_k(spectrum, j_max=None):
    """Subspace dimension just after the largest eigenvalue gap.

    ``k = argmax_{1 <= j <= j_max} (lambda_{j+1} - lambda_j)``, smallest ``j``
    on ties.
    """
    eig = spectrum.eigenvalues if isinstance(spectrum, LaplacianSpectrum) else np.asarray(spectrum)
    n = len(eig)
    if n < 2:
        raise InvalidInput("need at least two eigenvalues")
    if j_max is None:
        j_max = default_j_max(n)
    if not 1 <= j_max <= n - 1:
        raise InvalidInput(f"j_max must be in [1, {n - 1}], got {j_max}")
    gaps = gap_spectrum(eig)[:j_max]
    return int(np.argmax(gaps)) + 1


def low_frequency_subspace(spectrum, k):
    """Orthonormal basis of the ``k`` eigenvectors with the smallest eigenvalues."""
    if not 1 <= k <= spectrum.n:
        raise InvalidInput(f"k must be in [1, {spectrum.n}], got {k}")
    return spectrum.eigenvectors[:, :k].copy()


def subject_spectrum(C, density=0.20):
    return laplacian_spectrum(normalized_laplacian(adjacency_from_correlation(C, density)))


def group_k(groups, density=0.20, j_max=None):
    """Common subspace dimension for several groups of correlation matrices.

    Each group's adjacency matrices are averaged, the gap spectrum of the
    group-average Laplacian gives one ``k`` per group, and the largest is
    returned (a single dimension is needed to compare all subjects).

    Returns
    -------
    k : int
    per_group : list of int
    """
    per_group = []
    for Cs in groups:
        Cs = list(Cs)
        if not Cs:
            raise EmptyInput("empty group")
        mean_W = np.mean([adjacency_from_correlation(C, density) for C in Cs], axis=0)
        spec = laplacian_spectrum(normalized_laplacian(mean_W))
        per_group.append(gap_spectrum_select_k(spec, j_max))
    return max(per_group), per_group


def isolated_nodes(W):
    return np.flatnonzero(np.asarray(W).sum(axis=1) == 0)
