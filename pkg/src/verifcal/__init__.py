"""Confidence calibration for similarity-based pair verification."""

from .asc import AscParams, FitConfig, FitReport
from .asc import apply as apply_asc
from .asc import fit as fit_asc
from .baselines import HistogramModel, IsotonicModel, fit_histogram, fit_isotonic
from .core import Dataset, PairRecord, Prediction, Threshold, confidence, cosine_similarity, phi, predict
from .metrics import EceReport, accuracy, auc, best_accuracy_threshold, ece, roc_curve, threshold_at_far

__version__ = "0.1.0"

__all__ = [
    "AscParams",
    "Dataset",
    "EceReport",
    "FitConfig",
    "FitReport",
    "HistogramModel",
    "IsotonicModel",
    "PairRecord",
    "Prediction",
    "Threshold",
    "accuracy",
    "apply_asc",
    "auc",
    "best_accuracy_threshold",
    "confidence",
    "cosine_similarity",
    "ece",
    "fit_asc",
    "fit_histogram",
    "fit_isotonic",
    "phi",
    "predict",
    "roc_curve",
    "threshold_at_far",
]
