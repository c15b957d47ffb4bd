import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import two_gaussians
from oracles import asc_grid_losses, asc_grid_minimum, asc_loss_brute
from verifcal import asc
from verifcal.core import Dataset, predict
from verifcal.errors import DegenerateThreshold, SingleClassDataset
from verifcal.metrics import best_accuracy_threshold


def test_angle_examples():
    assert asc.angle(1.0) == 0.0
    assert asc.angle(-1.0) == math.pi
    assert asc.angle(0.0) == math.pi / 2


@pytest.mark.parametrize(
    "w, b, s, expected",
    [(1.0, 0.0, 0.37, 0.37), (2.0, 0.0, 0.5, -0.5), (2.0, 0.5, 0.0, -1.0)],
)
def test_apply_examples(w, b, s, expected):
    # threshold well above every s, so no score needs snapping to its side
    params = asc.AscParams.create(w, b, 0.99)
    assert params.transform(s) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("w, b, tau, expected", [(1.0, 0.0, 0.13, 0.13), (2.0, 0.0, 0.5, -0.5)])
def test_calibrated_threshold_examples(w, b, tau, expected):
    params = asc.AscParams.create(w, b, tau)
    assert params.tau_calibrated == pytest.approx(expected, abs=1e-12)
    assert asc.calibrated_threshold(params) == params.tau_calibrated


def test_calibrated_threshold_degenerate():
    with pytest.raises(DegenerateThreshold):
        asc.AscParams.create(1.0, math.pi, 0.0)


def test_params_validation():
    with pytest.raises(ValueError):
        asc.AscParams(0.0, 0.0, 0.1, 0.1)
    with pytest.raises(ValueError):
        asc.AscParams(1.0, float("nan"), 0.1, 0.1)


def test_fit_zero_loss_fixed_point():
    d = Dataset.from_arrays([1.0] * 5 + [-1.0] * 5, [1] * 5 + [-1] * 5)
    params, report = asc.fit(d, 0.3)
    assert report.final_loss == 0.0
    assert np.array_equal(params.transform(d.similarities), d.similarities)


def test_fit_zero_iterations_returns_identity(rng):
    d = two_gaussians(rng, 20, 20, 0.5, 0.1, 0.1)
    params, report = asc.fit(d, 0.3, asc.FitConfig(max_iter=0))
    assert (params.w, params.b) == (1.0, 0.0)
    assert report.converged is False and report.iterations == 0
    assert report.final_loss == report.initial_loss


def test_fit_rejects_single_class():
    d = Dataset.from_arrays([0.1, 0.5], [1, 1])
    with pytest.raises(SingleClassDataset):
        asc.fit(d, 0.2)


def test_fit_matches_grid_on_compressed_band(rng):
    d = two_gaussians(rng, 200, 200, 0.45, 0.25, 0.03)
    params, report = asc.fit(d, 0.35)
    best_admissible, _ = asc_grid_minimum(d.similarities, d.labels, 0.35)
    assert report.final_loss <= best_admissible + 1e-3
    assert report.final_loss <= report.initial_loss
    assert asc_loss_brute(d.similarities, d.labels, params.w, params.b) == pytest.approx(report.final_loss, abs=1e-12)


def test_grid_oracle_matches_brute_force(rng):
    d = two_gaussians(rng, 40, 30, 0.3, -0.1, 0.3)
    ws = np.array([0.01, 0.7, 1.0, 3.3, 8.0])
    bs = np.array([-math.pi, -1.2, 0.0, 0.8, math.pi])
    grid = asc_grid_losses(d.similarities, d.labels, ws, bs)
    brute = [[asc_loss_brute(d.similarities, d.labels, w, b) for b in bs] for w in ws]
    assert np.allclose(grid, brute, rtol=0, atol=1e-12)


def test_identity_fixed_point(rng):
    # Data pushed through an unclamped optimal map is optimal at (1, 0).
    checked = 0
    while checked < 3:
        d = two_gaussians(rng, 300, 300, rng.uniform(0.1, 0.4), rng.uniform(-0.4, -0.1), 0.35)
        params, _ = asc.fit(d, best_accuracy_threshold(d))
        raw = np.arccos(d.similarities) * params.w + params.b
        if np.any(raw <= 0) or np.any(raw >= math.pi):
            continue
        calibrated = Dataset.from_arrays(params.transform(d.similarities), d.labels)
        _, report = asc.fit(calibrated, params.tau_calibrated)
        assert abs(report.final_loss - report.initial_loss) <= 1e-9
        checked += 1


def test_loss_and_gradient_agree_with_loss(rng):
    theta = rng.uniform(0, math.pi, 50)
    y = rng.choice([-1.0, 1.0], 50)
    val, _ = asc.loss_and_gradient(theta, y, 1.3, -0.2)
    assert val == pytest.approx(asc.loss(theta, y, 1.3, -0.2), abs=1e-15)


def test_gradient_finite_differences(rng):
    checked = 0
    while checked < 25:
        theta = rng.uniform(0.05, math.pi - 0.05, int(rng.integers(5, 60)))
        y = rng.choice([-1.0, 1.0], theta.size)
        w = rng.uniform(0.2, 3.0)
        b = rng.uniform(-1.0, 1.0)
        raw = theta * w + b
        if np.any(np.abs(raw) < 1e-3) or np.any(np.abs(raw - math.pi) < 1e-3):
            continue
        _, g = asc.loss_and_gradient(theta, y, w, b)
        h = 1e-5
        fd = np.array([
            (asc.loss(theta, y, w + h, b) - asc.loss(theta, y, w - h, b)) / (2 * h),
            (asc.loss(theta, y, w, b + h) - asc.loss(theta, y, w, b - h)) / (2 * h),
        ])
        assert np.linalg.norm(g - fd) <= 1e-4 * max(np.linalg.norm(g), 1e-8)
        checked += 1


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.05, 6.0),
    st.floats(-3.0, 3.0),
    st.lists(st.floats(-1.0, 1.0), min_size=2, max_size=30),
)
def test_order_preservation(w, b, values):
    try:
        params = asc.AscParams.create(w, b, 0.0)
    except DegenerateThreshold:
        return
    s = np.sort(np.array(values))
    out = params.transform(s)
    assert np.all(np.diff(out) >= 0)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.05, 6.0),
    st.floats(-3.0, 3.0),
    st.floats(-0.99, 0.99),
    st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=30),
)
def test_decisions_preserved_for_any_interior_params(w, b, tau, values):
    try:
        params = asc.AscParams.create(w, b, tau)
    except DegenerateThreshold:
        return
    s = np.array(values + [tau, float(np.nextafter(tau, -2)), float(np.nextafter(tau, 2))])
    assert np.array_equal(predict(params.transform(s), params.tau_calibrated), predict(s, tau))


def test_fit_decision_preservation(rng):
    d = two_gaussians(rng, 500, 400, 0.5, 0.2, 0.15)
    tau = best_accuracy_threshold(d)
    params, _ = asc.fit(d, tau)
    assert np.array_equal(predict(params.transform(d.similarities), params.tau_calibrated),
                          predict(d.similarities, tau))


def test_fit_is_deterministic(rng):
    d = two_gaussians(rng, 100, 100, 0.4, 0.1, 0.1)
    assert asc.fit(d, 0.25) == asc.fit(d, 0.25)


def test_dict_roundtrip():
    p = asc.AscParams.create(1.7, -0.2, 0.35)
    assert asc.AscParams.from_dict(p.to_dict()) == p


def test_gradient_with_clamped_points(rng):
    # clamped samples contribute nothing; compare with FD away from the clamp edges
    theta = rng.uniform(0.0, math.pi, 80)
    y = rng.choice([-1.0, 1.0], 80)
    w, b = 2.5, -1.0
    raw = theta * w + b
    keep = (np.abs(raw) > 1e-3) & (np.abs(raw - math.pi) > 1e-3)
    theta, y = theta[keep], y[keep]
    _, g = asc.loss_and_gradient(theta, y, w, b)
    h = 1e-6
    fd_b = (asc.loss(theta, y, w, b + h) - asc.loss(theta, y, w, b - h)) / (2 * h)
    assert g[1] == pytest.approx(fd_b, rel=1e-5, abs=1e-9)


def test_fit_survives_extreme_data(rng):
    # near-separable data drives w upward; the search must not overflow
    d = Dataset.from_arrays([0.3000001] * 50 + [0.3] * 50, [1] * 50 + [-1] * 50)
    params, report = asc.fit(d, 0.30000005)
    assert report.final_loss <= report.initial_loss
    assert np.array_equal(predict(params.transform(d.similarities), params.tau_calibrated),
                          predict(d.similarities, 0.30000005))
