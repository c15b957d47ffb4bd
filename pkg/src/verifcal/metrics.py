"""Calibration and verification metrics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .core import Dataset, TauLike, confidence, predict, tau_value
from .errors import DegenerateThreshold, SingleClassDataset

EQUAL_WIDTH = "equal-width"
EQUAL_FREQUENCY = "equal-frequency"
SCHEMES = (EQUAL_WIDTH, EQUAL_FREQUENCY)
DEFAULT_ECE_BINS = 10


@dataclass(frozen=True)
class BinReport:
    lo: float
    hi: float
    count: int
    accuracy: float
    mean_confidence: float


@dataclass(frozen=True)
class EceReport:
    ece: float
    scheme: str
    m_bins: int
    bins: List[BinReport] = field(default_factory=list)

    @property
    def n(self) -> int:
        return sum(b.count for b in self.bins)

    def recompute(self) -> float:
        """ECE recomputed from the per-bin table."""
        n = self.n
        return sum(b.count / n * abs(b.accuracy - b.mean_confidence) for b in self.bins if b.count)


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tar: float
    far: float


def _require_both_classes(pairs: Dataset):
    if pairs.n_pos == 0 or pairs.n_neg == 0:
        raise SingleClassDataset(
            f"need both classes (positives={pairs.n_pos}, negatives={pairs.n_neg})"
        )


def ece_from_confidences(confidences, correct, m_bins: int = DEFAULT_ECE_BINS,
                         scheme: str = EQUAL_WIDTH) -> EceReport:
    """ECE of per-sample confidences in [0.5, 1] and correctness flags.

    Equal-width bins have width ``1 / (2 M)`` and are ``[lo, hi)`` except the
    last, which is closed. Equal-frequency bins take consecutive runs of the
    confidence-sorted samples with sizes differing by at most one; their
    ``lo``/``hi`` are the extreme confidences inside the bin.
    """
    if m_bins < 1:
        raise ValueError("m_bins must be at least 1")
    c = np.asarray(confidences, dtype=float)
    ok = np.asarray(correct, dtype=bool)
    n = c.size
    if n == 0:
        raise ValueError("cannot compute ECE of an empty set")
    bins = []
    if scheme == EQUAL_WIDTH:
        edges = 0.5 + np.arange(m_bins + 1) / (2 * m_bins)
        idx = np.clip(np.searchsorted(edges, c, side="right") - 1, 0, m_bins - 1)
        counts = np.bincount(idx, minlength=m_bins)
        hits = np.bincount(idx, weights=ok.astype(float), minlength=m_bins)
        conf_sums = np.bincount(idx, weights=c, minlength=m_bins)
        for m in range(m_bins):
            k = int(counts[m])
            acc = float(hits[m] / k) if k else 0.0
            mc = float(conf_sums[m] / k) if k else 0.0
            bins.append(BinReport(float(edges[m]), float(edges[m + 1]), k, acc, mc))
    elif scheme == EQUAL_FREQUENCY:
        order = np.argsort(c, kind="stable")
        for chunk in np.array_split(order, m_bins):
            k = int(chunk.size)
            if k == 0:
                continue
            cc = c[chunk]
            bins.append(BinReport(float(cc.min()), float(cc.max()), k,
                                  float(np.mean(ok[chunk])), float(np.mean(cc))))
    else:
        raise ValueError(f"unknown binning scheme {scheme!r}; expected one of {SCHEMES}")
    value = math.fsum(b.count / n * abs(b.accuracy - b.mean_confidence) for b in bins if b.count)
    return EceReport(float(value), scheme, m_bins, bins)


def ece(pairs: Dataset, tau: TauLike, m_bins: int = DEFAULT_ECE_BINS,
        scheme: str = EQUAL_WIDTH) -> EceReport:
    """ECE of the threshold-relative confidences of ``pairs`` at ``tau``."""
    t = tau_value(tau)
    s = pairs.similarities
    correct = np.asarray(predict(s, t)) == pairs.labels
    return ece_from_confidences(confidence(s, t), correct, m_bins, scheme)


def accuracy(pairs: Dataset, tau: TauLike) -> float:
    if len(pairs) == 0:
        raise ValueError("accuracy of an empty dataset")
    return float(np.mean(np.asarray(predict(pairs.similarities, tau)) == pairs.labels))


def mean_confidence(pairs: Dataset, tau: TauLike) -> float:
    return float(np.mean(confidence(pairs.similarities, tau)))


def roc_curve(pairs: Dataset) -> List[RocPoint]:
    """TAR/FAR of the ``s >= t`` rule at every distinct score, in ascending ``t``.

    Starts with the accept-all sentinel ``t = -1`` and ends with a reject-all
    sentinel strictly above the largest score.
    """
    _require_both_classes(pairs)
    s = pairs.similarities
    pos = np.sort(s[pairs.labels == 1])
    neg = np.sort(s[pairs.labels == -1])
    top = 1.0 if s.max() < 1.0 else float(np.nextafter(1.0, np.inf))
    thresholds = np.concatenate([[-1.0], np.unique(s), [top]])
    thresholds = np.unique(thresholds)
    tar = (pos.size - np.searchsorted(pos, thresholds, side="left")) / pos.size
    far = (neg.size - np.searchsorted(neg, thresholds, side="left")) / neg.size
    return [RocPoint(float(t), float(a), float(f)) for t, a, f in zip(thresholds, tar, far)]


def auc(pairs: Dataset) -> float:
    """Trapezoidal area under the ROC curve (ties count one half)."""
    pts = roc_curve(pairs)
    far = np.array([p.far for p in pts])[::-1]
    tar = np.array([p.tar for p in pts])[::-1]
    return float(np.sum(np.diff(far) * (tar[1:] + tar[:-1]) / 2.0))


def threshold_at_far(pairs: Dataset, far_target: float) -> RocPoint:
    """Smallest negative score whose FAR stays within ``far_target``.

    Any threshold in the gap below that score gives the same FAR; the score
    itself (the top of the gap) is returned. When no negative can be admitted
    the threshold sits just above the largest negative score. Returns the
    threshold together with the achieved TAR and FAR.
    """
    if not (0.0 < far_target < 1.0):
        raise ValueError("far_target must lie in (0, 1)")
    _require_both_classes(pairs)
    neg = np.sort(pairs.similarities[pairs.labels == -1])
    pos = pairs.similarities[pairs.labels == 1]
    n_neg = neg.size
    if n_neg < math.ceil(1.0 / far_target):
        warnings.warn(
            f"{n_neg} negatives cannot resolve a FAR of {far_target:g}", RuntimeWarning, stacklevel=2
        )
    allowed = math.floor(far_target * n_neg + 1e-9)
    values = np.unique(neg)
    admitted = n_neg - np.searchsorted(neg, values, side="left")
    ok = admitted <= allowed
    if ok.any():
        t = float(values[int(np.argmax(ok))])
    else:
        t = float(np.nextafter(neg[-1], np.inf))
    if not (-1.0 < t < 1.0):
        raise DegenerateThreshold(f"FAR-target threshold {t!r} is not inside (-1, 1)")
    far = float(np.mean(neg >= t))
    tar = float(np.mean(pos >= t))
    return RocPoint(t, tar, far)


def best_accuracy_threshold(pairs: Dataset) -> float:
    """Threshold maximising empirical accuracy.

    The rule ``s >= t`` only changes when ``t`` crosses a distinct score, so
    thresholds fall into intervals ``(u_{j-1}, u_j]``. Adjacent optimal
    intervals are merged and the midpoint of the lowest optimal run is
    returned.
    """
    _require_both_classes(pairs)
    s = pairs.similarities
    y = pairs.labels
    u, inv = np.unique(s, return_inverse=True)
    pos_at = np.bincount(inv, weights=(y == 1).astype(float), minlength=u.size)
    neg_at = np.bincount(inv, weights=(y == -1).astype(float), minlength=u.size)
    # interval j (0..len(u)) accepts scores u[j:]
    pos_accept = np.concatenate([np.cumsum(pos_at[::-1])[::-1], [0.0]])
    neg_below = np.concatenate([[0.0], np.cumsum(neg_at)])
    correct = pos_accept + neg_below
    lo = np.concatenate([[-1.0], u])
    hi = np.concatenate([u, [1.0]])
    valid = lo < hi
    # interval 0 is (-1, u_0]; interval len(u) is (u_last, 1)
    best = np.max(correct[valid])
    opt = valid & (correct == best)
    j = int(np.argmax(opt))
    end = j
    while end + 1 < opt.size and opt[end + 1]:
        end += 1
    t = 0.5 * (lo[j] + hi[end])
    return tau_value(t)
