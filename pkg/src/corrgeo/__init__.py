"""Geometry-aware analysis of brain connectivity (correlation) matrices.

Flat charts of the correlation-matrix manifold (Off-log, Euclidean-Cholesky,
log-Euclidean-Cholesky), graph-harmonic subspaces on the Grassmannian,
interpoint-distance permutation tests and cross-validated learners.
"""

from importlib.metadata import PackageNotFoundError, version

from .errors import CorrGeoError, NumericalError, ValidationError
from .manifold import (
    FlatCoords,
    Metric,
    dist,
    embed,
    embed_many,
    exp_off,
    frechet_mean,
    geodesic,
    log_off,
    star_inverse,
    star_product,
    unembed,
    validate_or_shrink,
)

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"
