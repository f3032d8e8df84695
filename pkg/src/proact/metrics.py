"""Segment machinery and the three segment-aware F1 metrics.

All metrics take equal-length binary vectors (prediction, ground truth) and
return values in [0, 1].  Empty-denominator conventions: precision, recall
and F1 are 0 when undefined, except that the segment-based metrics reject a
ground truth with no anomaly segments outright.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

K_GRID = tuple(k / 10.0 for k in range(11))


def _as_binary(vec: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(vec)
    if arr.ndim != 1:
        raise DataError(f"{name} must be 1-dimensional")
    arr = arr.astype(np.int64)
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise DataError(f"{name} must be 0/1")
    return arr


def _pair(pred: np.ndarray, truth: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pred = _as_binary(pred, "pred")
    truth = _as_binary(truth, "truth")
    if pred.shape != truth.shape:
        raise DataError(f"length mismatch: pred {pred.shape[0]} vs truth {truth.shape[0]}")
    return pred, truth


def segments(labels: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of 1s as [start, end) pairs."""
    labels = _as_binary(labels, "labels")
    padded = np.concatenate([[0], labels, [0]])
    delta = np.diff(padded)
    starts = np.flatnonzero(delta == 1)
    ends = np.flatnonzero(delta == -1)
    return list(zip(starts.tolist(), ends.tolist()))


def point_f1(pred: np.ndarray, truth: np.ndarray) -> tuple[float, float, float]:
    """(precision, recall, f1) from the point-wise confusion matrix."""
    pred, truth = _pair(pred, truth)
    tp = int(np.sum((pred == 1) & (truth == 1)))
    fp = int(np.sum((pred == 1) & (truth == 0)))
    fn = int(np.sum((pred == 0) & (truth == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def point_adjust_at_k(pred: np.ndarray, truth: np.ndarray, k: float) -> np.ndarray:
    """Fill each truth segment whose detected fraction strictly exceeds k."""
    pred, truth = _pair(pred, truth)
    adjusted = pred.copy()
    for start, end in segments(truth):
        hits = int(pred[start:end].sum())
        if hits / (end - start) > k:
            adjusted[start:end] = 1
    return adjusted


def f1_at_k_curve(pred: np.ndarray, truth: np.ndarray) -> list[float]:
    return [point_f1(point_adjust_at_k(pred, truth, k), truth)[2] for k in K_GRID]


def f1_at_k(pred: np.ndarray, truth: np.ndarray) -> float:
    """Mean point-wise F1 after PA%K over the 11-point grid K = 0.0 .. 1.0."""
    return float(np.mean(f1_at_k_curve(pred, truth)))


def f1_composite(pred: np.ndarray, truth: np.ndarray) -> float:
    """Harmonic mean of point-wise precision and segment-wise recall."""
    pred, truth = _pair(pred, truth)
    truth_segments = segments(truth)
    if not truth_segments:
        raise DataError("f1_composite undefined: ground truth has no anomaly segments")
    precision = point_f1(pred, truth)[0]
    detected = sum(1 for start, end in truth_segments if pred[start:end].any())
    recall = detected / len(truth_segments)
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def f1_range(pred: np.ndarray, truth: np.ndarray) -> float:
    """Range-based F1 with existence weight 0, flat bias, cardinality 1.

    Each truth segment's recall is its overlapped fraction; precision is the
    mirror over predicted segments; the score is the harmonic mean of the
    two per-segment means.
    """
    pred, truth = _pair(pred, truth)
    truth_segments = segments(truth)
    if not truth_segments:
        raise DataError("f1_range undefined: ground truth has no anomaly segments")
    pred_segments = segments(pred)

    recall = float(np.mean([pred[s:e].sum() / (e - s) for s, e in truth_segments]))
    if pred_segments:
        precision = float(np.mean([truth[s:e].sum() / (e - s) for s, e in pred_segments]))
    else:
        precision = 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class MetricReport:
    f1_at_k: float
    f1_composite: float
    f1_range: float
    point_precision: float
    point_recall: float
    point_f1: float
    f1_at_k_curve: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "f1_at_k": self.f1_at_k,
            "f1_composite": self.f1_composite,
            "f1_range": self.f1_range,
            "point_precision": self.point_precision,
            "point_recall": self.point_recall,
            "point_f1": self.point_f1,
            "f1_at_k_curve": list(self.f1_at_k_curve),
            "k_grid": list(K_GRID),
        }


def compute_metrics(pred: np.ndarray, truth: np.ndarray) -> MetricReport:
    precision, recall, f1 = point_f1(pred, truth)
    curve = f1_at_k_curve(pred, truth)
    return MetricReport(
        f1_at_k=float(np.mean(curve)),
        f1_composite=f1_composite(pred, truth),
        f1_range=f1_range(pred, truth),
        point_precision=precision,
        point_recall=recall,
        point_f1=f1,
        f1_at_k_curve=tuple(curve),
    )
