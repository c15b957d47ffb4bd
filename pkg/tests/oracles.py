"""Independent reference computations used by the test suite.

Nothing here imports the code paths it checks.
"""

import itertools
import math

import numpy as np


def asc_loss_brute(s, y, w, b):
    a = np.clip(np.arccos(np.asarray(s, dtype=float)) * w + b, 0.0, math.pi)
    return float(np.mean((np.cos(a) - np.asarray(y, dtype=float)) ** 2))


def asc_grid_losses(s, y, ws, bs):
    """Exact mean-squared-error losses on the grid ``ws x bs`` via prefix sums.

    For fixed ``w`` the data sorted by angle splits into a prefix clamped to
    angle 0 (cos = 1), an interior block, and a suffix clamped to pi
    (cos = -1). The interior sum of ``(cos(w t + b) - y)^2`` expands into
    sums of ``cos/sin(w t)``, ``cos/sin(2 w t)`` and ``y cos/sin(w t)``,
    which prefix sums give in O(1) per ``b``.
    """
    theta = np.arccos(np.asarray(s, dtype=float))
    y = np.asarray(y, dtype=float)
    order = np.argsort(theta, kind="stable")
    theta = theta[order]
    y = y[order]
    n = theta.size

    def csum(v):
        return np.concatenate([[0.0], np.cumsum(v)])

    p_one = csum((1.0 - y) ** 2)
    p_mone = csum((1.0 + y) ** 2)
    p_yy = csum(y * y)
    bs = np.asarray(bs, dtype=float)
    cb, sb = np.cos(bs), np.sin(bs)
    c2b, s2b = np.cos(2 * bs), np.sin(2 * bs)
    out = np.empty((len(ws), bs.size))
    for i, w in enumerate(ws):
        wt = w * theta
        pc, ps = csum(np.cos(wt)), csum(np.sin(wt))
        pc2, ps2 = csum(np.cos(2 * wt)), csum(np.sin(2 * wt))
        pyc, pys = csum(y * np.cos(wt)), csum(y * np.sin(wt))
        # interior: 0 <= w t + b <= pi  <=>  -b/w <= t <= (pi - b)/w
        lo = np.searchsorted(theta, -bs / w, side="left")
        hi = np.searchsorted(theta, (math.pi - bs) / w, side="right")
        hi = np.maximum(hi, lo)
        cnt = hi - lo
        sum_c2 = (pc2[hi] - pc2[lo]) * c2b - (ps2[hi] - ps2[lo]) * s2b
        sum_cos_sq = 0.5 * cnt + 0.5 * sum_c2
        sum_ycos = (pyc[hi] - pyc[lo]) * cb - (pys[hi] - pys[lo]) * sb
        interior = sum_cos_sq - 2.0 * sum_ycos + (p_yy[hi] - p_yy[lo])
        clamped = p_one[lo] + (p_mone[n] - p_mone[hi])
        out[i] = (interior + clamped) / n
    return out


def asc_grid_minimum(s, y, tau, w_step=0.005, w_max=8.0, b_step=0.005):
    """Best grid loss over w in (0, w_max], b in [-pi, pi].

    Returns ``(best_admissible, best_any)`` where admissible points keep the
    mapped threshold strictly inside (-1, 1).
    """
    ws = np.arange(1, int(round(w_max / w_step)) + 1) * w_step
    bs = np.arange(-math.pi, math.pi + 1e-12, b_step)
    losses = asc_grid_losses(s, y, ws, bs)
    t_angle = np.clip(math.acos(tau) * ws[:, None] + bs[None, :], 0.0, math.pi)
    t_cal = np.cos(t_angle)
    ok = (t_cal > -1.0) & (t_cal < 1.0)
    return float(np.min(np.where(ok, losses, np.inf))), float(np.min(losses))


def isotonic_brute(s, y):
    """Least-squares monotone fit by enumerating contiguous level sets.

    Tied ``s`` values must share a level. Returns ``(fitted, loss)`` with
    ``fitted`` aligned to the input order.
    """
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.argsort(s, kind="stable")
    ss, yy = s[order], y[order]
    n = ss.size
    # cut positions allowed only between distinct s values
    allowed = [i for i in range(1, n) if ss[i] != ss[i - 1]]
    best = (math.inf, None)
    for r in range(len(allowed) + 1):
        for cuts in itertools.combinations(allowed, r):
            edges = [0, *cuts, n]
            levels = [yy[a:b].mean() for a, b in zip(edges[:-1], edges[1:])]
            if any(levels[i] > levels[i + 1] for i in range(len(levels) - 1)):
                continue
            fitted = np.concatenate(
                [np.full(b - a, lv) for a, b, lv in zip(edges[:-1], edges[1:], levels)]
            )
            loss = float(np.sum((fitted - yy) ** 2))
            if loss < best[0]:
                best = (loss, fitted)
    out = np.empty(n)
    out[order] = best[1]
    return out, best[0]


def mann_whitney_auc(s, y):
    """P(score_pos > score_neg) + 0.5 P(tie), by explicit pair counting."""
    pos = [a for a, l in zip(s, y) if l == 1]
    neg = [a for a, l in zip(s, y) if l == -1]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def accuracy_scan(s, y, thresholds):
    """Accuracy of the ``s >= t`` rule for every candidate ``t``."""
    s = np.asarray(s)
    y = np.asarray(y)
    return np.array([np.mean(np.where(s >= t, 1, -1) == y) for t in thresholds])
