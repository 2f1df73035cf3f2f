"""CSV matrices and cohort manifests."""

import csv
from pathlib import Path

import numpy as np

from .cohort import CohortDataset, Subject
from .errors import DimensionMismatch, DuplicateId, MissingFile, ParseError
from .grassmann import ORTHO_TOL, as_point
from .manifold import validate_or_shrink

MANIFEST_HEADER = ["subject_id", "matrix_path", "label", "age"]


def _read_csv_array(path):
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"{path}: no such file")
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for r, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not tok.strip() for tok in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"{path}: row {r} has {len(row)} values, expected {width}")
            vals = []
            for c, tok in enumerate(row, start=1):
                try:
                    vals.append(float(tok))
                except ValueError:
                    raise ParseError(f"{path}: row {r}, column {c}: cannot parse {tok.strip()!r}") from None
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: empty file")
    A = np.array(rows, dtype=float)
    if not np.all(np.isfinite(A)):
        r, c = np.argwhere(~np.isfinite(A))[0] + 1
        raise ParseError(f"{path}: row {r}, column {c}: non-finite value")
    return A


def read_matrix(path, shrink_allowed=False, notes=None):
    """Load an n x n CSV correlation matrix and validate it.

    Repairs (symmetrization, diagonal renormalization, shrinkage) are
    appended to ``notes`` prefixed with the file name.
    """
    A = _read_csv_array(path)
    if A.shape[0] != A.shape[1]:
        raise ParseError(f"{path}: {A.shape[0]} rows of {A.shape[1]} values; matrix must be square")
    local = []
    C, _ = validate_or_shrink(A, shrink_allowed=shrink_allowed, notes=local)
    if notes is not None:
        notes.extend(f"{Path(path).name}: {msg}" for msg in local)
    return C


def read_basis(path):
    """Load an n x k CSV matrix with orthonormal columns (a Grassmann point)."""
    U = as_point(_read_csv_array(path))
    err = np.max(np.abs(U.T @ U - np.eye(U.shape[1])))
    if err > 1e-6:
        raise ParseError(f"{path}: columns are not orthonormal (max |U^T U - I| = {err:.3e})")
    if err > ORTHO_TOL:
        U, _ = np.linalg.qr(U)
    return U


def write_matrix(path, A):
    """Write a matrix as CSV with 17 significant digits (exact round trip)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for row in A:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def _parse_age(tok, where):
    tok = tok.strip()
    if not tok:
        return None
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"{where}: cannot parse age {tok!r}") from None


def read_manifest(path, shrink_allowed=False, loader=None):
    """Load a cohort from a ``subject_id,matrix_path,label,age`` manifest.

    Matrix paths are resolved relative to the manifest's directory; label and
    age may be empty. ``loader`` replaces `read_matrix` (e.g. `read_basis`).
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"{path}: no such file")
    notes = []
    if loader is None:
        def loader(p):
            return read_matrix(p, shrink_allowed=shrink_allowed, notes=notes)
    subjects = []
    seen = {}
    shape = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != MANIFEST_HEADER:
            raise ParseError(f"{path}: header must be exactly {','.join(MANIFEST_HEADER)}")
        for r, row in enumerate(reader, start=2):
            if not row or all(not tok.strip() for tok in row):
                continue
            if len(row) != 4:
                raise ParseError(f"{path}: row {r} has {len(row)} fields, expected 4")
            sid, mpath, label, age = (tok.strip() for tok in row)
            if not sid:
                raise ParseError(f"{path}: row {r}: empty subject_id")
            if sid in seen:
                raise DuplicateId(f"{path}: subject {sid!r} appears on rows {seen[sid]} and {r}")
            seen[sid] = r
            target = path.parent / mpath
            if not target.is_file():
                raise MissingFile(f"{path}: row {r}: matrix file {mpath!r} for subject {sid!r} not found")
            M = loader(target)
            if shape is None:
                shape = M.shape
            elif M.shape != shape:
                raise DimensionMismatch(f"subject {sid!r} has shape {M.shape}, expected {shape}")
            subjects.append(Subject(sid, M, label=label or None, age=_parse_age(age, f"{path}: row {r}")))
    return CohortDataset(subjects, notes)


def write_manifest(path, rows):
    """Write manifest rows ``(subject_id, matrix_path, label, age)``; None -> empty."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(MANIFEST_HEADER) + "\n")
        for sid, mpath, label, age in rows:
            age_s = "" if age is None else format(float(age), ".17g")
            fh.write(f"{sid},{mpath},{label or ''},{age_s}\n")


def write_cohort(directory, cohort):
    """Write every subject matrix to ``directory/matrices`` plus ``manifest.csv``."""
    directory = Path(directory)
    (directory / "matrices").mkdir(parents=True, exist_ok=True)
    rows = []
    for s in cohort.subjects:
        rel = f"matrices/{s.id}.csv"
        write_matrix(directory / rel, s.matrix)
        rows.append((s.id, rel, s.label, s.age))
    write_manifest(directory / "manifest.csv", rows)
    return directory / "manifest.csv"
