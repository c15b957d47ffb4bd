"""Histogram-binning and isotonic-regression calibrators over similarity.

Both map a raw similarity to a calibrated score in [-1, 1] and remap the
threshold through the same function. Scores of exactly +-1 selected as the
new threshold are nudged inward by ``THRESHOLD_NUDGE`` so the confidence
measure stays defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, TauLike, tau_value
from .errors import DegenerateThreshold, RangeError

THRESHOLD_NUDGE = 1e-6
DEFAULT_HISTOGRAM_BINS = 15


def _remapped_threshold(score: float) -> float:
    if not np.isfinite(score) or abs(score) > 1.0:
        raise DegenerateThreshold(f"remapped threshold {score!r} is not inside (-1, 1)")
    if score >= 1.0:
        score = 1.0 - THRESHOLD_NUDGE
    elif score <= -1.0:
        score = -1.0 + THRESHOLD_NUDGE
    return tau_value(score)


def _check_nonempty(dataset: Dataset):
    if len(dataset) == 0:
        raise RangeError("cannot fit a calibrator on an empty dataset")


@dataclass(frozen=True, eq=False)
class HistogramModel:
    """Equal-width bins over (-1, 1]; bin ``m`` is ``(a_m, a_{m+1}]``."""

    boundaries: np.ndarray
    scores: np.ndarray
    tau_raw: float
    tau_calibrated: float

    kind = "histogram"

    def __post_init__(self):
        a = np.asarray(self.boundaries, dtype=float)
        eta = np.asarray(self.scores, dtype=float)
        if a.ndim != 1 or a.size < 2 or a[0] != -1.0 or a[-1] != 1.0 or np.any(np.diff(a) <= 0):
            raise ValueError("boundaries must increase strictly from -1 to 1")
        if eta.shape != (a.size - 1,) or np.any(np.abs(eta) > 1.0):
            raise ValueError("need one score in [-1, 1] per bin")
        object.__setattr__(self, "boundaries", a)
        object.__setattr__(self, "scores", eta)
        object.__setattr__(self, "tau_raw", tau_value(self.tau_raw))
        object.__setattr__(self, "tau_calibrated", tau_value(self.tau_calibrated))

    @property
    def m_bins(self) -> int:
        return self.scores.size

    def bin_index(self, s):
        idx = np.searchsorted(self.boundaries, np.asarray(s, dtype=float), side="left") - 1
        return np.clip(idx, 0, self.m_bins - 1)

    def transform(self, s):
        return apply_histogram(self, s)

    def to_dict(self) -> dict:
        return {
            "boundaries": [float(v) for v in self.boundaries],
            "scores": [float(v) for v in self.scores],
            "tau_raw": self.tau_raw,
            "tau_calibrated": self.tau_calibrated,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HistogramModel":
        return cls(
            np.array(d["boundaries"], dtype=float),
            np.array(d["scores"], dtype=float),
            float(d["tau_raw"]),
            float(d["tau_calibrated"]),
        )


def fit_histogram(dataset: Dataset, tau: TauLike, m_bins: int = DEFAULT_HISTOGRAM_BINS) -> HistogramModel:
    """Per-bin label means; empty bins interpolate between non-empty neighbours."""
    if m_bins < 1:
        raise ValueError("m_bins must be at least 1")
    _check_nonempty(dataset)
    t = tau_value(tau)
    boundaries = np.linspace(-1.0, 1.0, m_bins + 1)
    idx = np.clip(np.searchsorted(boundaries, dataset.similarities, side="left") - 1, 0, m_bins - 1)
    counts = np.bincount(idx, minlength=m_bins)
    sums = np.bincount(idx, weights=dataset.labels.astype(float), minlength=m_bins)
    filled = counts > 0
    scores = np.empty(m_bins)
    scores[filled] = sums[filled] / counts[filled]
    if not filled.all():
        pos = np.arange(m_bins)
        scores[~filled] = np.interp(pos[~filled], pos[filled], scores[filled])
    model = HistogramModel(boundaries, scores, t, 0.0)
    t_idx = int(model.bin_index(t))
    object.__setattr__(model, "tau_calibrated", _remapped_threshold(float(scores[t_idx])))
    return model


def apply_histogram(model: HistogramModel, s):
    out = model.scores[model.bin_index(s)]
    return out if np.ndim(out) else float(out)


def pava(y, weights=None):
    """Pool-adjacent-violators: weighted least-squares non-decreasing fit of ``y``.

    ``y`` must already be in the order the fit should be monotone in.
    """
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    # stack of blocks: (mean, weight, length)
    means, wts, lens = [], [], []
    for yi, wi in zip(y, w):
        means.append(yi)
        wts.append(wi)
        lens.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, l2 = means.pop(), wts.pop(), lens.pop()
            m1, w1, l1 = means[-1], wts[-1], lens[-1]
            wt = w1 + w2
            means[-1] = (m1 * w1 + m2 * w2) / wt
            wts[-1] = wt
            lens[-1] = l1 + l2
    return np.repeat(means, lens)


@dataclass(frozen=True, eq=False)
class IsotonicModel:
    """Step function: level of the rightmost breakpoint ``<= s``."""

    breakpoints: np.ndarray
    levels: np.ndarray
    tau_raw: float
    tau_calibrated: float

    kind = "isotonic"

    def __post_init__(self):
        x = np.asarray(self.breakpoints, dtype=float)
        lv = np.asarray(self.levels, dtype=float)
        if x.ndim != 1 or x.size == 0 or x.shape != lv.shape:
            raise ValueError("breakpoints and levels must be non-empty and aligned")
        if np.any(np.diff(x) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(np.diff(lv) < 0):
            raise ValueError("levels must be non-decreasing")
        object.__setattr__(self, "breakpoints", x)
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "tau_raw", tau_value(self.tau_raw))
        object.__setattr__(self, "tau_calibrated", tau_value(self.tau_calibrated))

    def transform(self, s):
        return apply_isotonic(self, s)

    def to_dict(self) -> dict:
        return {
            "breakpoints": [float(v) for v in self.breakpoints],
            "levels": [float(v) for v in self.levels],
            "tau_raw": self.tau_raw,
            "tau_calibrated": self.tau_calibrated,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IsotonicModel":
        return cls(
            np.array(d["breakpoints"], dtype=float),
            np.array(d["levels"], dtype=float),
            float(d["tau_raw"]),
            float(d["tau_calibrated"]),
        )


def fit_isotonic(dataset: Dataset, tau: TauLike) -> IsotonicModel:
    _check_nonempty(dataset)
    t = tau_value(tau)
    # pool tied similarities first, weighted by multiplicity
    xs, inverse, counts = np.unique(dataset.similarities, return_inverse=True, return_counts=True)
    sums = np.bincount(inverse, weights=dataset.labels.astype(float), minlength=xs.size)
    levels = pava(sums / counts, counts)
    model = IsotonicModel(xs, levels, t, 0.0)
    object.__setattr__(model, "tau_calibrated", _remapped_threshold(float(apply_isotonic(model, t))))
    return model


def apply_isotonic(model: IsotonicModel, s):
    idx = np.searchsorted(model.breakpoints, np.asarray(s, dtype=float), side="right") - 1
    out = model.levels[np.clip(idx, 0, model.levels.size - 1)]
    return out if np.ndim(out) else float(out)
