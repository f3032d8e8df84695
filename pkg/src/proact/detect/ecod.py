"""Empirical-CDF tail scores (rank-based, parameter-free)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError


@dataclass
class EcodModel:
    """Per-dimension sorted training values plus sample skewness."""

    sorted_train: np.ndarray
    skewness: np.ndarray

    @property
    def n(self) -> int:
        return self.sorted_train.shape[0]

    @property
    def dim(self) -> int:
        return self.sorted_train.shape[1]


def _skewness(x: np.ndarray) -> np.ndarray:
    """Population skewness per column; 0 for constant columns."""
    centered = x - x.mean(axis=0)
    m2 = np.mean(centered**2, axis=0)
    m3 = np.mean(centered**3, axis=0)
    safe = np.where(m2 > 0, m2, 1.0)
    return np.where(m2 > 0, m3 / safe**1.5, 0.0)


def ecod_fit(train: np.ndarray) -> EcodModel:
    x = np.asarray(train, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DataError("training matrix must be 2-dimensional and nonempty")
    if not np.all(np.isfinite(x)):
        raise DataError("training matrix contains non-finite values")
    return EcodModel(np.sort(x, axis=0), _skewness(x))


def ecod_score_many(model: EcodModel, x: np.ndarray) -> np.ndarray:
    """Aggregated negative log tail probabilities; higher means more anomalous.

    Per dimension, the left tail is rank_<=/n and the right tail is
    (n - rank_<)/n, both clamped to at least 1/(n+1); the skewness picks the
    side for the automatic variant, and the final score is the largest of the
    three aggregates.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise DataError(f"scoring input shape {x.shape} does not match dimension {model.dim}")
    n = model.n
    floor = 1.0 / (n + 1)
    p_left = np.empty_like(x)
    p_right = np.empty_like(x)
    for j in range(model.dim):
        col = model.sorted_train[:, j]
        p_left[:, j] = np.searchsorted(col, x[:, j], side="right") / n
        p_right[:, j] = (n - np.searchsorted(col, x[:, j], side="left")) / n
    p_left = np.maximum(p_left, floor)
    p_right = np.maximum(p_right, floor)

    neg_l = -np.log(p_left)
    neg_r = -np.log(p_right)
    auto = np.where(model.skewness[None, :] < 0, neg_l, neg_r)
    o_left = neg_l.sum(axis=1)
    o_right = neg_r.sum(axis=1)
    o_auto = auto.sum(axis=1)
    return np.maximum(np.maximum(o_left, o_right), o_auto)


def ecod_score(model: EcodModel, x: np.ndarray) -> float:
    return float(ecod_score_many(model, np.asarray(x, dtype=np.float64)[None, :])[0])
