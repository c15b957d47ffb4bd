"""Domain types, the decision rule and the threshold-relative confidence.

A verification pair is scored by a cosine similarity ``s`` in [-1, 1] and
accepted when ``s >= tau``. The confidence of that decision grows linearly
with the distance from ``tau``, normalised by the width of the side of the
interval the score falls on, and is mapped to [0.5, 1]:

    phi(s, tau) = (s - tau) / (1 - tau)   if s >= tau
                  (tau - s) / (1 + tau)   otherwise
    c(s, tau)   = 0.5 * phi(s, tau) + 0.5

All functions accept scalars or numpy arrays for ``s``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union

import numpy as np

from .errors import DimensionError, RangeError, DegenerateThreshold

#: Similarities this far outside [-1, 1] are treated as float noise and clamped.
CLAMP_TOLERANCE = 1e-6

POSITIVE = 1
NEGATIVE = -1


@dataclass(frozen=True)
class Threshold:
    """Decision threshold strictly inside (-1, 1)."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not (-1.0 < v < 1.0):
            raise DegenerateThreshold(f"threshold {v!r} is not inside (-1, 1)")
        object.__setattr__(self, "value", v)

    def __float__(self):
        return self.value


TauLike = Union[Threshold, float]


def tau_value(tau: TauLike) -> float:
    """Return ``tau`` as a float, validating it lies in (-1, 1)."""
    if isinstance(tau, Threshold):
        return tau.value
    return Threshold(tau).value


@dataclass(frozen=True)
class PairRecord:
    similarity: float
    label: int

    def __post_init__(self):
        object.__setattr__(self, "similarity", float(clamp_similarity(self.similarity)))
        if self.label not in (POSITIVE, NEGATIVE):
            raise RangeError(f"label must be -1 or +1, got {self.label!r}")
        object.__setattr__(self, "label", int(self.label))


@dataclass(frozen=True)
class Prediction:
    decision: int
    confidence: float


def clamp_similarity(s, tol: float = CLAMP_TOLERANCE):
    """Clamp float noise into [-1, 1]; raise ``RangeError`` beyond ``tol``."""
    arr = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise RangeError("similarity is not finite")
    if np.any(np.abs(arr) > 1.0 + tol):
        bad = arr[np.abs(arr) > 1.0 + tol].flat[0]
        raise RangeError(f"similarity {bad!r} outside [-1, 1]")
    out = np.clip(arr, -1.0, 1.0)
    return out if out.ndim else float(out)


def predict(s, tau: TauLike):
    """Decision rule: +1 when ``s >= tau`` (ties are positive), else -1."""
    t = tau_value(tau)
    out = np.where(np.asarray(s) >= t, POSITIVE, NEGATIVE)
    return out if out.ndim else int(out)


def phi(s, tau: TauLike):
    """Normalised distance of ``s`` from ``tau`` on its side of the interval."""
    t = tau_value(tau)
    s_arr = np.asarray(s, dtype=float)
    out = np.where(s_arr >= t, (s_arr - t) / (1.0 - t), (t - s_arr) / (1.0 + t))
    return out if out.ndim else float(out)


def confidence(s, tau: TauLike):
    """Probabilistic confidence in [0.5, 1] of the decision ``predict(s, tau)``."""
    out = 0.5 * np.asarray(phi(s, tau)) + 0.5
    return out if out.ndim else float(out)


def predict_with_confidence(s: float, tau: TauLike) -> Prediction:
    return Prediction(decision=predict(s, tau), confidence=confidence(s, tau))


def cosine_similarity(a, b):
    """Cosine of the angle between ``a`` and ``b`` clamped to [-1, 1].

    Works row-wise on 2-D input.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.shape[-1] == 0:
        raise DimensionError("empty vectors")
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    if np.any(na == 0) or np.any(nb == 0):
        raise DimensionError("zero-norm vector")
    out = np.clip(np.sum(a * b, axis=-1) / (na * nb), -1.0, 1.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Scored verification pairs held as parallel arrays.

    ``folds`` is an optional per-record fold id (contiguous from 0).
    Use :meth:`from_arrays` to build one from raw values; it applies the
    clamping rule and validates labels.
    """

    similarities: np.ndarray
    labels: np.ndarray
    folds: Optional[np.ndarray] = None

    @classmethod
    def from_arrays(cls, similarities, labels, folds=None) -> "Dataset":
        s = np.atleast_1d(np.asarray(clamp_similarity(similarities), dtype=float))
        y = np.atleast_1d(np.asarray(labels))
        if s.ndim != 1 or s.shape != y.shape:
            raise RangeError("similarities and labels must be 1-D of equal length")
        if not np.all((y == POSITIVE) | (y == NEGATIVE)):
            raise RangeError("labels must be -1 or +1")
        y = y.astype(np.int64)
        f = None
        if folds is not None:
            f = np.atleast_1d(np.asarray(folds))
            if f.shape != s.shape:
                raise RangeError("fold ids must match the number of records")
            if f.size and not np.array_equal(np.unique(f), np.arange(int(f.max()) + 1)):
                raise RangeError("fold ids must be contiguous integers starting at 0")
            f = f.astype(np.int64)
        s.setflags(write=False)
        y.setflags(write=False)
        if f is not None:
            f.setflags(write=False)
        return cls(s, y, f)

    @classmethod
    def from_records(cls, records) -> "Dataset":
        records = list(records)
        return cls.from_arrays(
            [r.similarity for r in records], [r.label for r in records]
        )

    def __len__(self):
        return int(self.similarities.shape[0])

    @property
    def records(self) -> Iterator[PairRecord]:
        for s, y in zip(self.similarities, self.labels):
            yield PairRecord(float(s), int(y))

    @property
    def n_pos(self) -> int:
        return int(np.count_nonzero(self.labels == POSITIVE))

    @property
    def n_neg(self) -> int:
        return int(np.count_nonzero(self.labels == NEGATIVE))

    def subset(self, mask) -> "Dataset":
        mask = np.asarray(mask)
        folds = None if self.folds is None else self.folds[mask]
        s = self.similarities[mask]
        y = self.labels[mask]
        # fold ids of a subset need not stay contiguous, so skip revalidation
        return Dataset(s, y, folds)

    def with_folds(self, folds) -> "Dataset":
        return Dataset.from_arrays(self.similarities, self.labels, folds)
