"""Angular scaling calibration.

Similarities are moved to angle space, ``theta = arccos(s)``, scaled by an
affine map ``theta' = w * theta + b`` with ``w > 0`` and mapped back with
``cos``. The threshold is moved by the same map, so every decision made
against the calibrated threshold matches the uncalibrated one while the
confidences spread out (or contract) to track accuracy.

``(w, b)`` are fitted by minimising the mean squared error between the
calibrated similarity and the ``{-1, +1}`` labels, starting from the
identity ``(1, 0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset, TauLike, tau_value
from .errors import DegenerateThreshold, SingleClassDataset

KIND = "asc"


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings.

    ``learning_rate`` scales the initial inverse-Hessian estimate and hence
    the first step; ``tol`` is the per-iteration loss improvement below
    which the fit is declared converged. With ``global_restart`` a coarse
    scan of the parameter plane picks a second starting point, because
    clamping makes the loss non-convex.
    """

    learning_rate: float = 0.01
    max_iter: int = 1000
    tol: float = 1e-10
    global_restart: bool = True


@dataclass(frozen=True)
class FitReport:
    initial_loss: float
    final_loss: float
    iterations: int
    converged: bool


def angle(s):
    """Angle in [0, pi] whose cosine is ``s``."""
    out = np.arccos(np.clip(np.asarray(s, dtype=float), -1.0, 1.0))
    return out if out.ndim else float(out)


def _affine_angle(theta, w, b):
    return np.clip(np.asarray(theta) * w + b, 0.0, math.pi)


def transform_threshold(tau: TauLike, w: float, b: float) -> float:
    """Map a threshold through the angular affine map without validation."""
    if w == 1.0 and b == 0.0:
        return tau_value(tau)
    return float(math.cos(min(max(math.acos(tau_value(tau)) * w + b, 0.0), math.pi)))


@dataclass(frozen=True)
class AscParams:
    w: float
    b: float
    tau_raw: float
    tau_calibrated: float

    kind = KIND

    def __post_init__(self):
        if not (self.w > 0 and math.isfinite(self.w)):
            raise ValueError(f"w must be a positive finite number, got {self.w!r}")
        if not math.isfinite(self.b):
            raise ValueError(f"b must be finite, got {self.b!r}")
        object.__setattr__(self, "tau_raw", tau_value(self.tau_raw))
        object.__setattr__(self, "tau_calibrated", tau_value(self.tau_calibrated))

    @classmethod
    def create(cls, w: float, b: float, tau: TauLike) -> "AscParams":
        """Build params, deriving the calibrated threshold from ``(w, b, tau)``."""
        w, b = float(w), float(b)
        t = tau_value(tau)
        return cls(w, b, t, calibrated_threshold_of(w, b, t))

    def transform(self, s):
        return apply(self, s)

    def to_dict(self) -> dict:
        return {
            "w": self.w,
            "b": self.b,
            "tau_raw": self.tau_raw,
            "tau_calibrated": self.tau_calibrated,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AscParams":
        return cls(float(d["w"]), float(d["b"]), float(d["tau_raw"]), float(d["tau_calibrated"]))


def calibrated_threshold_of(w: float, b: float, tau: TauLike) -> float:
    t = transform_threshold(tau, w, b)
    if not (-1.0 < t < 1.0):
        raise DegenerateThreshold(
            f"calibrated threshold {t!r} (w={w!r}, b={b!r}) is not inside (-1, 1)"
        )
    return t


def calibrated_threshold(params: AscParams) -> float:
    """Recompute the calibrated threshold from ``(w, b, tau_raw)``."""
    return calibrated_threshold_of(params.w, params.b, params.tau_raw)


def apply(params: AscParams, s):
    """Calibrated similarity ``cos(clamp(arccos(s) * w + b, 0, pi))``.

    Scores within a few ulps of the threshold can have their order relative
    to the threshold scrambled by rounding; those are snapped to the correct
    side so decisions against ``tau_calibrated`` match decisions against
    ``tau_raw`` exactly.
    """
    s_arr = np.asarray(s, dtype=float)
    if params.w == 1.0 and params.b == 0.0:
        # exact identity; cos(arccos(s)) is only accurate to a few ulps
        out = np.clip(s_arr, -1.0, 1.0)
        return out if out.ndim else float(out)
    out = np.cos(_affine_angle(np.arccos(np.clip(s_arr, -1.0, 1.0)), params.w, params.b))
    pos = s_arr >= params.tau_raw
    t = params.tau_calibrated
    out = np.where(pos & (out < t), t, out)
    out = np.where(~pos & (out >= t), np.nextafter(t, -np.inf), out)
    return out if out.ndim else float(out)


def loss(theta, y, w: float, b: float) -> float:
    """Mean squared error between calibrated similarity and labels."""
    r = np.cos(_affine_angle(theta, w, b)) - y
    return float(np.mean(r * r))


def loss_and_gradient(theta, y, w: float, b: float):
    """Loss and its gradient with respect to ``(w, b)``.

    Points whose affine angle is clamped contribute no gradient.
    """
    theta = np.asarray(theta, dtype=float)
    raw = theta * w + b
    inside = (raw > 0.0) & (raw < math.pi)
    clamped = np.clip(raw, 0.0, math.pi)
    r = np.cos(clamped) - y
    n = theta.shape[0]
    dl_dangle = np.where(inside, -2.0 * r * np.sin(clamped), 0.0)
    gw = float(np.dot(dl_dangle, theta)) / n
    gb = float(np.sum(dl_dangle)) / n
    return float(np.dot(r, r)) / n, np.array([gw, gb])


def _objective(theta, y, theta_tau):
    """Loss in ``(u, b)`` with ``w = exp(u)``; +inf where the threshold degenerates."""

    def f(x):
        if not -700.0 < x[0] < 700.0:
            return math.inf, np.zeros(2)
        w = math.exp(x[0])
        b = x[1]
        t = math.cos(min(max(theta_tau * w + b, 0.0), math.pi))
        if not (-1.0 < t < 1.0):
            return math.inf, np.zeros(2)
        val, g = loss_and_gradient(theta, y, w, b)
        return val, np.array([g[0] * w, g[1]])

    return f


def _bfgs(f, x0, learning_rate, max_iter, tol):
    """Minimise ``f`` (returning value and gradient) with BFGS + Armijo backtracking.

    Returns ``(x, fx, iterations, converged)``.
    """
    x = np.asarray(x0, dtype=float)
    fx, g = f(x)
    h = np.eye(x.size) * learning_rate
    first = True
    for it in range(1, max_iter + 1):
        gnorm = float(np.max(np.abs(g)))
        if gnorm < 1e-14:
            return x, fx, it - 1, True
        p = -h @ g
        slope = float(p @ g)
        if slope >= 0:
            # lost descent; restart from scaled steepest descent
            h = np.eye(x.size) * learning_rate
            p = -h @ g
            slope = float(p @ g)
        step = 1.0
        for _ in range(60):
            x_new = x + step * p
            f_new, g_new = f(x_new)
            if f_new <= fx + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            # no decrease along a descent direction: stationary to precision
            return x, fx, it, True
        sk = x_new - x
        yk = g_new - g
        sy = float(sk @ yk)
        if sy > 1e-300:
            if first:
                h = np.eye(x.size) * (sy / float(yk @ yk))
                first = False
            rho = 1.0 / sy
            i = np.eye(x.size)
            h = (i - rho * np.outer(sk, yk)) @ h @ (i - rho * np.outer(yk, sk)) + rho * np.outer(sk, sk)
        improvement = fx - f_new
        x, fx, g = x_new, f_new, g_new
        if improvement < tol:
            return x, fx, it, True
    return x, fx, max_iter, False


_SCAN_LOG2_W = np.linspace(-3.0, 6.0, 28)
_SCAN_THRESHOLD_ANGLE = np.linspace(0.02, 0.98, 25) * math.pi
_SCAN_MAX_POINTS = 2048


def _scan_start(theta, y, theta_tau):
    """Best point of a coarse ``(log w, b)`` grid, in optimizer coordinates.

    For each ``w`` the offsets are chosen so the mapped threshold angle
    sweeps the interior of (0, pi). Large datasets are thinned to an evenly
    strided subsample of their sorted angles.
    """
    if theta.size > _SCAN_MAX_POINTS:
        order = np.argsort(theta, kind="stable")
        pick = order[np.linspace(0, theta.size - 1, _SCAN_MAX_POINTS).astype(np.int64)]
        theta, y = theta[pick], y[pick]
    w = np.exp2(_SCAN_LOG2_W)
    b = _SCAN_THRESHOLD_ANGLE[None, :] - w[:, None] * theta_tau
    ang = np.clip(theta[None, None, :] * w[:, None, None] + b[:, :, None], 0.0, math.pi)
    losses = np.mean((np.cos(ang) - y) ** 2, axis=2)
    i, j = np.unravel_index(int(np.argmin(losses)), losses.shape)
    return np.array([math.log(w[i]), b[i, j]])


def fit(dataset: Dataset, tau: TauLike, config: FitConfig | None = None):
    """Fit ``(w, b)`` on a recalibration set.

    Returns ``(AscParams, FitReport)``. Parameter points that would push the
    calibrated threshold onto +-1 are excluded from the search.
    """
    config = config or FitConfig()
    t = tau_value(tau)
    if dataset.n_pos == 0 or dataset.n_neg == 0:
        raise SingleClassDataset(
            f"need both classes to fit (positives={dataset.n_pos}, negatives={dataset.n_neg})"
        )
    theta = np.arccos(dataset.similarities)
    y = dataset.labels.astype(float)
    f = _objective(theta, y, math.acos(t))
    initial, _ = f(np.zeros(2))
    if config.max_iter <= 0:
        return AscParams.create(1.0, 0.0, t), FitReport(initial, initial, 0, False)
    x, fx, iterations, converged = _bfgs(
        f, np.zeros(2), config.learning_rate, config.max_iter, config.tol
    )
    if config.global_restart:
        start = _scan_start(theta, y, math.acos(t))
        x2, fx2, it2, conv2 = _bfgs(
            f, start, config.learning_rate, config.max_iter, config.tol
        )
        iterations += it2
        if fx2 < fx:
            x, fx, converged = x2, fx2, conv2
    params = AscParams.create(math.exp(x[0]), float(x[1]), t)
    return params, FitReport(initial, fx, iterations, converged)
