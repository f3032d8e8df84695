"""Extreme-value threshold calibration and a persistable detector bundle."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DataError
from .ecod import EcodModel, ecod_fit, ecod_score_many
from .gmm import GmmModel, gmm_fit, gmm_score_many
from .svdd import SvddModel, svdd_fit, svdd_score_many

FORMAT_VERSION = 1

NORMAL_HIGH = "normal-high"

ANOMALY_HIGH = "anomaly-high"

# orientation is fixed by detector kind, not chosen per run
ORIENTATION = {"gmm": NORMAL_HIGH, "ecod": ANOMALY_HIGH, "svdd": ANOMALY_HIGH}


@dataclass(frozen=True)
class Threshold:
    value: float
    orientation: str

    def __post_init__(self):
        if self.orientation not in (NORMAL_HIGH, ANOMALY_HIGH):
            raise ConfigError(f"unknown orientation {self.orientation!r}")
        if not np.isfinite(self.value):
            raise DataError("threshold must be finite")


def calibrate(kind: str, train_scores: np.ndarray) -> Threshold:
    """Training extreme as tau: min for normal-high kinds, max for anomaly-high."""
    if kind not in ORIENTATION:
        raise ConfigError(f"unknown detector kind {kind!r}")
    scores = np.asarray(train_scores, dtype=np.float64)
    if scores.size == 0:
        raise DataError("cannot calibrate on empty scores")
    if not np.all(np.isfinite(scores)):
        raise DataError("calibration scores contain non-finite values")
    orientation = ORIENTATION[kind]
    value = float(scores.min()) if orientation == NORMAL_HIGH else float(scores.max())
    return Threshold(value, orientation)


def is_anomaly(threshold: Threshold, scores: np.ndarray | float) -> np.ndarray | bool:
    """Strict comparison against tau; a score equal to tau counts as normal."""
    scores = np.asarray(scores, dtype=np.float64)
    if threshold.orientation == NORMAL_HIGH:
        flags = scores < threshold.value
    else:
        flags = scores > threshold.value
    return bool(flags) if flags.ndim == 0 else flags


@dataclass
class Detector:
    """A fitted scorer plus its calibrated threshold."""

    kind: str
    model: GmmModel | EcodModel | SvddModel
    threshold: Threshold

    @property
    def dim(self) -> int:
        return self.model.dim


def score_many(detector: Detector, x: np.ndarray) -> np.ndarray:
    if detector.kind == "gmm":
        return gmm_score_many(detector.model, x)
    if detector.kind == "ecod":
        return ecod_score_many(detector.model, x)
    return svdd_score_many(detector.model, x)


def fit_detector(
    kind: str,
    train: np.ndarray,
    seed: int = 0,
    components: int = 4,
    max_iter: int = 100,
    tol: float = 1e-6,
    epochs: int = 200,
    learning_rate: float = 1e-3,
) -> Detector:
    """Fit the scorer on raw training rows and calibrate tau on the same rows."""
    if kind == "gmm":
        model = gmm_fit(train, k=components, seed=seed, max_iter=max_iter, tol=tol)
    elif kind == "ecod":
        model = ecod_fit(train)
    elif kind == "svdd":
        model = svdd_fit(train, seed=seed, epochs=epochs, lr=learning_rate)
    else:
        raise ConfigError(f"unknown detector kind {kind!r}")
    detector = Detector(kind, model, Threshold(0.0, ORIENTATION[kind]))
    detector.threshold = calibrate(kind, score_many(detector, np.asarray(train, dtype=np.float64)))
    return detector


def detector_to_doc(detector: Detector) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "detector",
        "detector_kind": detector.kind,
        "threshold": {"value": detector.threshold.value, "orientation": detector.threshold.orientation},
    }
    m = detector.model
    if detector.kind == "gmm":
        doc["model"] = {
            "weights": m.weights.tolist(),
            "means": m.means.tolist(),
            "variances": m.variances.tolist(),
            "loglik_trace": list(m.loglik_trace),
        }
    elif detector.kind == "ecod":
        doc["model"] = {
            "sorted_train": m.sorted_train.tolist(),
            "skewness": m.skewness.tolist(),
        }
    else:
        doc["model"] = {
            "w1": m.w1.tolist(),
            "w2": m.w2.tolist(),
            "center": m.center.tolist(),
            "weight_decay": m.weight_decay,
        }
    return doc


def detector_from_doc(doc: dict) -> Detector:
    if doc.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported detector format_version {doc.get('format_version')!r}")
    if doc.get("kind") != "detector":
        raise DataError(f"not a detector document: kind={doc.get('kind')!r}")
    kind = doc["detector_kind"]
    body = doc["model"]
    if kind == "gmm":
        model = GmmModel(
            np.asarray(body["weights"], dtype=np.float64),
            np.asarray(body["means"], dtype=np.float64),
            np.asarray(body["variances"], dtype=np.float64),
            list(body.get("loglik_trace", [])),
        )
    elif kind == "ecod":
        model = EcodModel(
            np.asarray(body["sorted_train"], dtype=np.float64),
            np.asarray(body["skewness"], dtype=np.float64),
        )
    elif kind == "svdd":
        model = SvddModel(
            np.asarray(body["w1"], dtype=np.float64),
            np.asarray(body["w2"], dtype=np.float64),
            np.asarray(body["center"], dtype=np.float64),
            float(body.get("weight_decay", 1e-4)),
        )
    else:
        raise DataError(f"unknown detector kind {kind!r}")
    threshold = Threshold(float(doc["threshold"]["value"]), doc["threshold"]["orientation"])
    return Detector(kind, model, threshold)


def save_detector(detector: Detector, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(detector_to_doc(detector), fh)
        fh.write("\n")


def load_detector(path: str | Path) -> Detector:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read detector {path}: {exc}") from exc
    return detector_from_doc(doc)
