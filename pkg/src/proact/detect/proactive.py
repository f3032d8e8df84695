"""Forecast-then-score detection: flags are decided before observation.

Each timestep t >= N is forecast from the observed history alone, the
forecast row (raw continuous units plus integer codes) is scored by the
calibrated detector, and the flag is the threshold comparison.  Ground-truth
test values never reach the detector; labels are consulted only to summarize
detection latency afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Normalizer, RawSeries
from ..errors import DataError
from ..forecaster.model import ForecastModel
from ..forecaster.training import forecast_series
from ..metrics import segments
from .threshold import Detector, is_anomaly, score_many


@dataclass(frozen=True)
class LatencyEntry:
    """First flag near one labeled segment.

    latency = first_flag - segment_start; negative when the detector fired
    during the precursor, None when the segment was missed entirely.
    """

    segment_start: int
    segment_end: int
    first_flag: int | None
    latency: int | None


@dataclass(frozen=True)
class DetectionResult:
    """Per-timestep forecast scores and flags for timesteps N..T-1."""

    scores: np.ndarray
    flags: np.ndarray
    first_timestep: int
    latencies: tuple[LatencyEntry, ...] | None

    def flagged_timesteps(self) -> np.ndarray:
        return self.first_timestep + np.flatnonzero(self.flags)


def latency_summary(
    flags: np.ndarray, labels: np.ndarray, first_timestep: int
) -> tuple[LatencyEntry, ...]:
    """Attribute each flag run-up to the next labeled segment.

    The search for a segment's first flag stops at the segment end and
    starts window-length timesteps after the previous segment ends, because
    forecasts before that point still condition on anomalous history and
    their flags belong to the segment that just ended.
    """
    window = first_timestep
    flagged = np.zeros(labels.shape[0], dtype=bool)
    flagged[first_timestep : first_timestep + flags.shape[0]] = flags
    entries = []
    lo = first_timestep
    for start, end in segments(labels):
        hits = np.flatnonzero(flagged[lo : max(lo, end)])
        if hits.size:
            first = int(lo + hits[0])
            entries.append(LatencyEntry(start, end, first, first - start))
        else:
            entries.append(LatencyEntry(start, end, None, None))
        lo = max(lo, end + window)
    return tuple(entries)


def proactive_detect(
    model: ForecastModel,
    normalizer: Normalizer,
    detector: Detector,
    test: RawSeries,
) -> DetectionResult:
    schema = test.schema
    if detector.dim != schema.c + schema.d:
        raise DataError(
            f"detector expects {detector.dim} features, forecast space has {schema.c + schema.d}"
        )
    predicted = forecast_series(model, normalizer, test)
    scores = score_many(detector, predicted.values)
    flags = np.asarray(is_anomaly(detector.threshold, scores))
    first = model.shape.window
    latencies = None
    if test.labels is not None:
        latencies = latency_summary(flags, test.labels, first)
    return DetectionResult(scores, flags, first, latencies)
