"""Dataset I/O, synthetic data, stratified folds and calibrator files.

Input formats
-------------
CSV
    ``similarity,label[,fold]`` per row; an optional header row is skipped.
JSONL
    One object per line with ``"sim"`` and ``"label"`` (or ``"emb_a"``,
    ``"emb_b"`` and ``"label"`` for embedding pairs) and an optional
    ``"fold"``.

Random numbers
--------------
Synthetic data and fold shuffles draw from numpy's PCG64 bit generator
(PCG-XSL-RR 128/64) seeded with the user's integer seed. Only the raw
uniform doubles of that stream are used; Gaussian variates come from the
Box-Muller transform below, so results do not depend on numpy's
version-specific sampling algorithms.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .asc import AscParams
from .baselines import HistogramModel, IsotonicModel
from .core import CLAMP_TOLERANCE, Dataset, cosine_similarity
from .errors import DimensionError, ParseError, RangeError, TooFewPerClass, VersionMismatch

MODEL_FORMAT = "verifcal-model"
MODEL_VERSION = 1
MODEL_KINDS = {cls.kind: cls for cls in (AscParams, HistogramModel, IsotonicModel)}


def detect_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".ndjson", ".json"):
        return "jsonl"
    return "csv"


def _parse_label(raw, line):
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ParseError(f"label {raw!r} is not a number", line) from None
    if value not in (1.0, -1.0):
        raise RangeError(f"line {line}: label must be -1 or +1, got {raw!r}")
    return int(value)


def _parse_similarity(raw, line):
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ParseError(f"similarity {raw!r} is not a number", line) from None
    if not math.isfinite(value) or abs(value) > 1.0 + CLAMP_TOLERANCE:
        raise RangeError(f"line {line}: similarity {value!r} outside [-1, 1]")
    return min(max(value, -1.0), 1.0)


def _parse_fold(raw, line):
    try:
        value = int(raw)
    except (TypeError, ValueError):
        raise ParseError(f"fold id {raw!r} is not an integer", line) from None
    if value < 0:
        raise RangeError(f"line {line}: fold id must be non-negative")
    return value


def _read_csv_rows(path):
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, [f.strip() for f in line.split(",")]


def _read_jsonl_rows(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno) from None
            if not isinstance(obj, dict):
                raise ParseError("expected a JSON object", lineno)
            yield lineno, obj


def _build(sims, labels, folds):
    if not sims:
        raise ParseError("no records found")
    has_folds = [f is not None for f in folds]
    if any(has_folds) and not all(has_folds):
        raise ParseError("fold ids must be given for every record or for none")
    return Dataset.from_arrays(sims, labels, folds if all(has_folds) else None)


def load_pairs(path, format: Optional[str] = None) -> Dataset:
    """Load scored pairs, preserving row order."""
    fmt = format or detect_format(path)
    sims, labels, folds = [], [], []
    if fmt == "csv":
        first = True
        for lineno, fields in _read_csv_rows(path):
            if first:
                first = False
                try:
                    float(fields[0])
                except ValueError:
                    continue  # header
            if len(fields) not in (2, 3):
                raise ParseError(f"expected 2 or 3 columns, got {len(fields)}", lineno)
            sims.append(_parse_similarity(fields[0], lineno))
            labels.append(_parse_label(fields[1], lineno))
            folds.append(_parse_fold(fields[2], lineno) if len(fields) == 3 else None)
    elif fmt == "jsonl":
        for lineno, obj in _read_jsonl_rows(path):
            if "sim" not in obj or "label" not in obj:
                raise ParseError('expected keys "sim" and "label"', lineno)
            sims.append(_parse_similarity(obj["sim"], lineno))
            labels.append(_parse_label(obj["label"], lineno))
            folds.append(_parse_fold(obj["fold"], lineno) if "fold" in obj else None)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return _build(sims, labels, folds)


def load_embeddings(path, format: Optional[str] = None) -> Dataset:
    """Load embedding pairs and score each row by cosine similarity.

    JSONL rows carry ``emb_a``/``emb_b`` lists. CSV rows are
    ``a_1..a_d, b_1..b_d, label`` with an even number of vector columns.
    """
    fmt = format or detect_format(path)
    sims, labels, folds = [], [], []
    dim = None
    if fmt == "jsonl":
        for lineno, obj in _read_jsonl_rows(path):
            if not {"emb_a", "emb_b", "label"} <= obj.keys():
                raise ParseError('expected keys "emb_a", "emb_b" and "label"', lineno)
            try:
                a = np.asarray(obj["emb_a"], dtype=float)
                b = np.asarray(obj["emb_b"], dtype=float)
            except (TypeError, ValueError):
                raise ParseError("embeddings must be lists of numbers", lineno) from None
            if a.ndim != 1 or b.ndim != 1:
                raise ParseError("embeddings must be flat lists", lineno)
            if dim is None:
                dim = a.size
            if a.size != dim or b.size != dim:
                raise DimensionError(f"line {lineno}: embedding dimension differs from {dim}")
            try:
                sims.append(cosine_similarity(a, b))
            except DimensionError as exc:
                raise DimensionError(f"line {lineno}: {exc}") from None
            labels.append(_parse_label(obj["label"], lineno))
            folds.append(_parse_fold(obj["fold"], lineno) if "fold" in obj else None)
    elif fmt == "csv":
        for lineno, fields in _read_csv_rows(path):
            try:
                values = [float(f) for f in fields[:-1]]
            except ValueError:
                if not sims and dim is None:
                    continue  # header
                raise ParseError("non-numeric embedding component", lineno) from None
            if len(values) % 2 or not values:
                raise DimensionError(f"line {lineno}: odd number of embedding columns")
            d = len(values) // 2
            if dim is None:
                dim = d
            if d != dim:
                raise DimensionError(f"line {lineno}: embedding dimension differs from {dim}")
            try:
                sims.append(cosine_similarity(values[:d], values[d:]))
            except DimensionError as exc:
                raise DimensionError(f"line {lineno}: {exc}") from None
            labels.append(_parse_label(fields[-1], lineno))
            folds.append(None)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return _build(sims, labels, folds)


def write_text_atomic(path, text: str):
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_pairs(dataset: Dataset, format: str = "csv") -> str:
    lines = []
    folds = dataset.folds
    if format == "csv":
        lines.append("similarity,label" + (",fold" if folds is not None else ""))
        for i, (s, y) in enumerate(zip(dataset.similarities, dataset.labels)):
            row = f"{float(s)!r},{int(y)}"
            if folds is not None:
                row += f",{int(folds[i])}"
            lines.append(row)
    elif format == "jsonl":
        for i, (s, y) in enumerate(zip(dataset.similarities, dataset.labels)):
            obj = {"sim": float(s), "label": int(y)}
            if folds is not None:
                obj["fold"] = int(folds[i])
            lines.append(json.dumps(obj))
    else:
        raise ValueError(f"unknown format {format!r}")
    return "\n".join(lines) + "\n"


def save_pairs(dataset: Dataset, path, format: Optional[str] = None):
    write_text_atomic(path, dump_pairs(dataset, format or detect_format(path)))


@dataclass(frozen=True)
class SyntheticSpec:
    """Two Gaussian similarity populations, clamped to [-1, 1]."""

    n_pos: int
    n_neg: int
    pos_mean: float
    pos_sd: float
    neg_mean: float
    neg_sd: float
    seed: int = 0

    def __post_init__(self):
        if self.n_pos < 1 or self.n_neg < 1:
            raise ValueError("n_pos and n_neg must be at least 1")
        if not (self.pos_sd > 0 and self.neg_sd > 0):
            raise ValueError("standard deviations must be positive")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")


def _normal(rng: np.random.Generator, n: int) -> np.ndarray:
    u1 = 1.0 - rng.random(n)  # (0, 1]
    u2 = rng.random(n)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def generate(spec: SyntheticSpec) -> Dataset:
    """Positives first, then negatives; deterministic in ``spec.seed``."""
    rng = make_rng(spec.seed)
    pos = spec.pos_mean + spec.pos_sd * _normal(rng, spec.n_pos)
    neg = spec.neg_mean + spec.neg_sd * _normal(rng, spec.n_neg)
    s = np.clip(np.concatenate([pos, neg]), -1.0, 1.0)
    y = np.concatenate([np.ones(spec.n_pos, dtype=np.int64), -np.ones(spec.n_neg, dtype=np.int64)])
    return Dataset.from_arrays(s, y)


@dataclass(frozen=True, eq=False)
class FoldSplit:
    k: int
    assignments: np.ndarray
    seed: int

    def train_test(self, dataset: Dataset, fold: int):
        """``(recalibration, test)`` with ``fold`` held out."""
        held = self.assignments == fold
        return dataset.subset(~held), dataset.subset(held)


def stratified_folds(dataset: Dataset, k: int, seed: int = 0) -> FoldSplit:
    """Shuffle each class, then deal its members round-robin over the folds.

    The dealing position carries over from positives to negatives so total
    fold sizes also stay within one of each other.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if dataset.n_pos < k or dataset.n_neg < k:
        raise TooFewPerClass(
            f"{k} folds need at least {k} pairs per class "
            f"(positives={dataset.n_pos}, negatives={dataset.n_neg})"
        )
    rng = make_rng(seed)
    assignments = np.empty(len(dataset), dtype=np.int64)
    offset = 0
    for label in (1, -1):
        members = np.flatnonzero(dataset.labels == label)
        keys = rng.random(members.size)
        shuffled = members[np.argsort(keys, kind="stable")]
        assignments[shuffled] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    return FoldSplit(k, assignments, seed)


def folds_from_dataset(dataset: Dataset) -> FoldSplit:
    """Use fold ids supplied with the data."""
    if dataset.folds is None:
        raise ValueError("dataset carries no fold ids")
    k = int(dataset.folds.max()) + 1
    if k < 2:
        raise ValueError("supplied fold ids describe fewer than two folds")
    return FoldSplit(k, np.asarray(dataset.folds), -1)


def model_to_dict(model) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "params": model.to_dict(),
    }


def model_from_dict(d) -> object:
    if not isinstance(d, dict) or d.get("format") != MODEL_FORMAT:
        raise ParseError("not a calibrator model file")
    if d.get("version") != MODEL_VERSION:
        raise VersionMismatch(f"unsupported model version {d.get('version')!r}")
    kind = d.get("kind")
    if kind not in MODEL_KINDS:
        raise VersionMismatch(f"unknown calibrator kind {kind!r}")
    try:
        return MODEL_KINDS[kind].from_dict(d["params"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad {kind} parameters: {exc}") from None


def dumps_model(model) -> str:
    # json writes floats with repr, which round-trips exactly
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n"


def loads_model(text: str):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    return model_from_dict(d)


def save_model(model, path):
    write_text_atomic(path, dumps_model(model))


def load_model(path):
    with open(path) as fh:
        return loads_model(fh.read())
