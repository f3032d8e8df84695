"""Forecastability analysis: short-segment spectra and hull membership.

A length-6 segment is summarized by the magnitudes of its 4 real-DFT
coefficients.  Anomaly segments (five observations plus one labeled last
point) are compared against the training distribution two ways: their
frequency basis sets must union to the training superset, and their
magnitude vectors are tested for membership in the convex polytope of
training magnitudes via an exact phase-1 LP feasibility solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import RawSeries
from .errors import DataError, NumericError

SEGMENT_LENGTH = 6

BASIS_EPS = 1e-9

LP_TOL = 1e-8


def extract_segments(
    values: np.ndarray,
    labels: np.ndarray | None,
    mode: str,
    segment_length: int = SEGMENT_LENGTH,
) -> list[np.ndarray]:
    """Length-n windows from one channel.

    train mode: every stride-1 window.  anomaly mode: windows whose last
    point is labeled anomalous and whose history fills the rest, i.e. ending
    at t >= segment_length - 1 with labels[t] = 1.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise DataError("extract_segments expects one channel at a time")
    n = segment_length
    if mode == "train":
        if values.shape[0] < n:
            raise DataError(f"no qualifying windows: series length {values.shape[0]} < {n}")
        sliding = np.lib.stride_tricks.sliding_window_view(values, n)
        return [sliding[i].copy() for i in range(sliding.shape[0])]
    if mode != "anomaly":
        raise DataError(f"unknown extraction mode {mode!r}")
    if labels is None:
        raise DataError("anomaly mode requires labels")
    ends = [t for t in np.flatnonzero(np.asarray(labels) == 1) if t >= n - 1]
    if not ends:
        raise DataError("no qualifying windows: no labeled anomaly with enough history")
    return [values[t - n + 1 : t + 1].copy() for t in ends]


def anomaly_end_indices(labels: np.ndarray, segment_length: int = SEGMENT_LENGTH) -> list[int]:
    return [int(t) for t in np.flatnonzero(np.asarray(labels) == 1) if t >= segment_length - 1]


def rdft(segment: np.ndarray, segment_length: int = SEGMENT_LENGTH) -> np.ndarray:
    """Real-input DFT coefficients X_0..X_{n/2} by direct summation."""
    v = np.asarray(segment, dtype=np.float64)
    if v.shape != (segment_length,):
        raise DataError(f"segment must have length {segment_length}, got shape {v.shape}")
    n = segment_length
    half = n // 2 + 1
    coeffs = np.empty(half, dtype=np.complex128)
    for k in range(half):
        coeffs[k] = np.sum(v * np.exp(-2j * np.pi * k * np.arange(n) / n))
    return coeffs


def irdft(coeffs: np.ndarray, segment_length: int = SEGMENT_LENGTH) -> np.ndarray:
    """Inverse via conjugate symmetry; exact for spectra of real segments."""
    n = segment_length
    half = n // 2 + 1
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    if coeffs.shape != (half,):
        raise DataError(f"expected {half} coefficients, got shape {coeffs.shape}")
    if n % 2 == 0:
        full = np.concatenate([coeffs, np.conj(coeffs[-2:0:-1])])
    else:
        full = np.concatenate([coeffs, np.conj(coeffs[-1:0:-1])])
    t = np.arange(n)
    out = np.empty(n)
    for i in range(n):
        out[i] = np.real(np.sum(full * np.exp(2j * np.pi * t * i / n)) / n)
    return out


def basis_set(magnitudes: np.ndarray, eps: float = BASIS_EPS) -> frozenset[int]:
    """Frequency indices whose magnitude strictly exceeds eps."""
    return frozenset(int(i) for i in np.flatnonzero(np.asarray(magnitudes) > eps))


@dataclass(frozen=True)
class SpectralSample:
    """One segment with its spectrum summary."""

    values: np.ndarray
    coeffs: np.ndarray
    magnitudes: np.ndarray
    basis: frozenset[int]


def spectral_sample(
    segment: np.ndarray, segment_length: int = SEGMENT_LENGTH, eps: float = BASIS_EPS
) -> SpectralSample:
    coeffs = rdft(segment, segment_length)
    magnitudes = np.abs(coeffs)
    return SpectralSample(np.asarray(segment, dtype=np.float64), coeffs, magnitudes, basis_set(magnitudes, eps))


def superset_equal(train: list[SpectralSample], anomaly: list[SpectralSample]) -> bool:
    """Union of training basis sets equals the union over anomaly samples."""
    if not train or not anomaly:
        raise DataError("superset comparison needs nonempty sample lists")
    union_train = frozenset().union(*(s.basis for s in train))
    union_anomaly = frozenset().union(*(s.basis for s in anomaly))
    return union_train == union_anomaly


def hull_membership(points: np.ndarray, query: np.ndarray, tol: float = LP_TOL) -> bool:
    """Is query a convex combination of the rows of points?

    Solves the phase-1 LP: minimize the sum of artificials subject to
    points^T lam + artificials = [query, 1], lam >= 0.  Bland's rule guards
    against cycling; rows are scaled to their max entry so tol is relative.
    """
    points = np.asarray(points, dtype=np.float64)
    query = np.asarray(query, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 1:
        raise DataError("hull needs at least one point")
    if query.shape != (points.shape[1],):
        raise DataError(f"query shape {query.shape} does not match dimension {points.shape[1]}")
    if not (np.all(np.isfinite(points)) and np.all(np.isfinite(query))):
        raise DataError("hull membership requires finite inputs")

    # cheap separating axis: any coordinate beyond the train range is outside
    if np.any(query > points.max(axis=0) + tol) or np.any(query < points.min(axis=0) - tol):
        return False

    num, dim = points.shape
    m = dim + 1
    a = np.empty((m, num))
    a[:dim] = points.T
    a[dim] = 1.0
    b = np.append(query, 1.0)

    scale = np.maximum(np.abs(a).max(axis=1), np.abs(b))
    scale = np.where(scale > 0, scale, 1.0)
    a /= scale[:, None]
    b /= scale
    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0

    # tableau [a | I | b] with artificial basis; minimize sum of artificials
    tableau = np.hstack([a, np.eye(m), b[:, None]])
    cost = np.concatenate([np.zeros(num), np.ones(m)])
    basis = list(range(num, num + m))

    max_pivots = 200 * (num + m)
    for _ in range(max_pivots):
        # artificials never re-enter, so only original columns are candidates
        reduced = cost[:num] - cost[basis] @ tableau[:, :num]
        candidates = np.flatnonzero(reduced < -1e-12)
        if candidates.size == 0:
            break
        enter = int(candidates[0])  # Bland: smallest eligible index
        col = tableau[:, enter]
        rows = np.flatnonzero(col > 1e-12)
        if rows.size == 0:
            raise NumericError("phase-1 LP unbounded; inconsistent tableau")
        ratios = tableau[rows, -1] / col[rows]
        best = ratios.min()
        tied = rows[np.flatnonzero(ratios <= best + 1e-15)]
        leave = int(tied[np.argmin([basis[r] for r in tied])])
        pivot = tableau[leave, enter]
        tableau[leave] /= pivot
        others = np.arange(m) != leave
        tableau[others] -= np.outer(tableau[others, enter], tableau[leave])
        basis[leave] = enter
    else:
        raise NumericError("phase-1 LP exceeded pivot budget")

    objective = float(cost[basis] @ tableau[:, -1])
    return objective <= tol


@dataclass(frozen=True)
class AnomalySampleResult:
    end_index: int
    inside: bool
    magnitudes: tuple[float, ...]


@dataclass(frozen=True)
class FeatureHull:
    feature: str
    train_samples: int
    anomaly_samples: int
    superset_equal: bool
    outside_count: int
    outside_fraction: float
    samples: tuple[AnomalySampleResult, ...]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "train_samples": self.train_samples,
            "anomaly_samples": self.anomaly_samples,
            "superset_equal": self.superset_equal,
            "outside_count": self.outside_count,
            "outside_fraction": self.outside_fraction,
        }


@dataclass(frozen=True)
class HullReport:
    features: tuple[FeatureHull, ...]
    pooled_anomaly_samples: int
    pooled_outside_count: int
    pooled_outside_fraction: float
    segment_length: int
    epsilon: float

    def to_dict(self) -> dict:
        return {
            "features": [f.to_dict() for f in self.features],
            "pooled_anomaly_samples": self.pooled_anomaly_samples,
            "pooled_outside_count": self.pooled_outside_count,
            "pooled_outside_fraction": self.pooled_outside_fraction,
            "segment_length": self.segment_length,
            "epsilon": self.epsilon,
        }


def forecastability_report(
    train: RawSeries,
    test: RawSeries,
    segment_length: int = SEGMENT_LENGTH,
    eps: float = BASIS_EPS,
    tol: float = LP_TOL,
) -> HullReport:
    """Per continuous channel: training polytope vs anomaly-segment spectra."""
    if test.labels is None:
        raise DataError("forecastability analysis requires labeled test data")
    if train.schema.c == 0:
        raise DataError("forecastability analysis needs at least one continuous channel")

    features = []
    pooled_total = 0
    pooled_outside = 0
    train_cont = train.continuous()
    test_cont = test.continuous()
    ends = anomaly_end_indices(test.labels, segment_length)
    for j, name in enumerate(train.schema.continuous_cols):
        train_samples = [
            spectral_sample(seg, segment_length, eps)
            for seg in extract_segments(train_cont[:, j], None, "train", segment_length)
        ]
        anomaly_samples = [
            spectral_sample(seg, segment_length, eps)
            for seg in extract_segments(test_cont[:, j], test.labels, "anomaly", segment_length)
        ]
        train_mags = np.array([s.magnitudes for s in train_samples])
        rows = []
        outside = 0
        for end, sample in zip(ends, anomaly_samples):
            inside = hull_membership(train_mags, sample.magnitudes, tol)
            outside += 0 if inside else 1
            rows.append(AnomalySampleResult(end, inside, tuple(float(v) for v in sample.magnitudes)))
        features.append(
            FeatureHull(
                feature=name,
                train_samples=len(train_samples),
                anomaly_samples=len(anomaly_samples),
                superset_equal=superset_equal(train_samples, anomaly_samples),
                outside_count=outside,
                outside_fraction=outside / len(anomaly_samples),
                samples=tuple(rows),
            )
        )
        pooled_total += len(anomaly_samples)
        pooled_outside += outside
    return HullReport(
        features=tuple(features),
        pooled_anomaly_samples=pooled_total,
        pooled_outside_count=pooled_outside,
        pooled_outside_fraction=pooled_outside / pooled_total,
        segment_length=segment_length,
        epsilon=eps,
    )
