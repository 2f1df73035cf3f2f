"""Labeled collections of subject correlation matrices."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, DuplicateId, EmptyInput, InvalidInput, TooFewSamples


@dataclass
class Subject:
    id: str
    matrix: np.ndarray
    label: str = None
    age: float = None


@dataclass
class CohortDataset:
    subjects: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        n = None
        for s in self.subjects:
            if s.id in seen:
                raise DuplicateId(f"duplicate subject id {s.id!r}")
            seen.add(s.id)
            shape = np.shape(s.matrix)
            if n is None:
                n = shape
            elif shape != n:
                raise DimensionMismatch(f"subject {s.id!r} has shape {shape}, expected {n}")

    def __len__(self):
        return len(self.subjects)

    @property
    def n(self):
        if not self.subjects:
            raise EmptyInput("empty cohort")
        return self.subjects[0].matrix.shape[0]

    @property
    def ids(self):
        return [s.id for s in self.subjects]

    @property
    def matrices(self):
        return [s.matrix for s in self.subjects]

    @property
    def labels(self):
        return np.array([s.label for s in self.subjects], dtype=object)

    @property
    def ages(self):
        return np.array([np.nan if s.age is None else s.age for s in self.subjects], dtype=float)

    def binary_labels(self):
        """Boolean vector, True for the positive class, plus the (negative, positive) names.

        The positive (patient) class is the second label in sorted order, so
        ``A``/``B`` cohorts treat ``B`` as positive.
        """
        labels = self.labels
        if any(l is None or l == "" for l in labels):
            raise InvalidInput("every subject needs a label for this analysis")
        names = sorted(set(labels))
        if len(names) != 2:
            raise InvalidInput(f"expected exactly two labels, found {names}")
        return labels == names[1], tuple(names)

    def require_ages(self):
        ages = self.ages
        if np.any(np.isnan(ages)):
            missing = [s.id for s in self.subjects if s.age is None]
            raise TooFewSamples(f"age missing for {len(missing)} subject(s), e.g. {missing[0]!r}")
        return ages
