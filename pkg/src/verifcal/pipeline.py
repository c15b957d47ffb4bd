"""Fit/evaluate/k-fold workflows shared by the CLI and library users."""

from __future__ import annotations

import math
from dataclasses import asdict
from typing import Optional

import numpy as np

from . import asc, baselines, metrics
from .core import Dataset, tau_value
from .data import FoldSplit

CALIBRATORS = ("asc", "histogram", "isotonic")
TAU_MODES = ("auto", "fixed", "far-target", "best-accuracy")


def resolve_tau(dataset: Dataset, tau: Optional[float] = None, mode: str = "auto",
                far_target: Optional[float] = None) -> float:
    """Pick the decision threshold: explicit value, then FAR target, then best accuracy."""
    if mode not in TAU_MODES:
        raise ValueError(f"unknown tau mode {mode!r}")
    if mode == "auto":
        mode = "fixed" if tau is not None else "far-target" if far_target is not None else "best-accuracy"
    if mode == "fixed":
        if tau is None:
            raise ValueError("tau mode 'fixed' needs a tau value")
        return tau_value(tau)
    if mode == "far-target":
        if far_target is None:
            raise ValueError("tau mode 'far-target' needs a FAR target")
        return metrics.threshold_at_far(dataset, far_target).threshold
    return metrics.best_accuracy_threshold(dataset)


def fit_calibrator(kind: str, dataset: Dataset, tau: float, histogram_bins: int = baselines.DEFAULT_HISTOGRAM_BINS,
                   config: Optional[asc.FitConfig] = None):
    """Returns ``(model, fit_report_or_None)``."""
    if kind == "asc":
        return asc.fit(dataset, tau, config)
    if kind == "histogram":
        return baselines.fit_histogram(dataset, tau, histogram_bins), None
    if kind == "isotonic":
        return baselines.fit_isotonic(dataset, tau), None
    raise ValueError(f"unknown calibrator {kind!r}; expected one of {CALIBRATORS}")


def calibrate_dataset(model, dataset: Dataset) -> Dataset:
    """Dataset of calibrated similarities (labels unchanged)."""
    return Dataset(np.asarray(model.transform(dataset.similarities), dtype=float), dataset.labels)


def summarize(dataset: Dataset, tau: float, m_bins: int, scheme: str) -> dict:
    report = metrics.ece(dataset, tau, m_bins, scheme)
    return {
        "tau": tau,
        "accuracy": metrics.accuracy(dataset, tau),
        "mean_confidence": metrics.mean_confidence(dataset, tau),
        "ece": report.ece,
        "bins": [asdict(b) for b in report.bins],
    }


def evaluate(model, dataset: Dataset, m_bins: int = metrics.DEFAULT_ECE_BINS,
             scheme: str = metrics.EQUAL_WIDTH) -> dict:
    """Before/after calibration metrics of ``model`` on ``dataset``."""
    out = {
        "calibrator": model.kind,
        "n": len(dataset),
        "m_bins": m_bins,
        "scheme": scheme,
        "tau_raw": model.tau_raw,
        "tau_calibrated": model.tau_calibrated,
        "uncalibrated": summarize(dataset, model.tau_raw, m_bins, scheme),
        "calibrated": summarize(calibrate_dataset(model, dataset), model.tau_calibrated, m_bins, scheme),
    }
    if dataset.n_pos and dataset.n_neg:
        s = dataset.similarities
        out["verification"] = {
            "auc": metrics.auc(dataset),
            "tar": float(np.mean(s[dataset.labels == 1] >= model.tau_raw)),
            "far": float(np.mean(s[dataset.labels == -1] >= model.tau_raw)),
        }
    return out


_FOLD_METRICS = (
    "accuracy_pre", "accuracy_post", "mean_confidence_pre", "mean_confidence_post", "ece_pre", "ece_post",
)


def kfold(dataset: Dataset, split: FoldSplit, kind: str, m_bins: int = metrics.DEFAULT_ECE_BINS,
          scheme: str = metrics.EQUAL_WIDTH, tau: Optional[float] = None, tau_mode: str = "auto",
          far_target: Optional[float] = None, histogram_bins: int = baselines.DEFAULT_HISTOGRAM_BINS,
          config: Optional[asc.FitConfig] = None) -> dict:
    """Fit on k-1 folds, evaluate on the held-out one, for every fold."""
    rows = []
    for fold in range(split.k):
        train, test = split.train_test(dataset, fold)
        t = resolve_tau(train, tau, tau_mode, far_target)
        model, _ = fit_calibrator(kind, train, t, histogram_bins, config)
        ev = evaluate(model, test, m_bins, scheme)
        rows.append({
            "fold": fold,
            "n_train": len(train),
            "n_test": len(test),
            "tau_raw": model.tau_raw,
            "tau_calibrated": model.tau_calibrated,
            "accuracy_pre": ev["uncalibrated"]["accuracy"],
            "accuracy_post": ev["calibrated"]["accuracy"],
            "mean_confidence_pre": ev["uncalibrated"]["mean_confidence"],
            "mean_confidence_post": ev["calibrated"]["mean_confidence"],
            "ece_pre": ev["uncalibrated"]["ece"],
            "ece_post": ev["calibrated"]["ece"],
        })
    mean = {key: math.fsum(r[key] for r in rows) / len(rows) for key in _FOLD_METRICS}
    return {
        "calibrator": kind,
        "k": split.k,
        "seed": split.seed,
        "m_bins": m_bins,
        "scheme": scheme,
        "folds": rows,
        "mean": mean,
    }


def reliability_diagram(evaluation: dict, path):
    """Write an accuracy-vs-confidence plot (format from the file suffix)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(8, 4), sharey=True)
    for ax, key in zip(axes, ("uncalibrated", "calibrated")):
        section = evaluation[key]
        bins = [b for b in section["bins"] if b["count"]]
        centers = [(b["lo"] + b["hi"]) / 2 for b in bins]
        widths = [max(b["hi"] - b["lo"], 0.01) for b in bins]
        ax.bar(centers, [b["accuracy"] for b in bins], width=widths, edgecolor="k", alpha=0.7, label="accuracy")
        ax.plot([b["mean_confidence"] for b in bins], [b["accuracy"] for b in bins], "o", color="C3",
                label="(confidence, accuracy)")
        ax.plot([0.5, 1.0], [0.5, 1.0], "--", color="gray")
        ax.set_xlim(0.5, 1.0)
        ax.set_ylim(0.0, 1.0)
        ax.set_xlabel("confidence")
        ax.set_title(f"{key}: ECE={100 * section['ece']:.2f}%")
    axes[0].set_ylabel("accuracy")
    axes[0].legend(loc="upper left")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
