"""Data-driven scorers, threshold calibration, and the proactive loop."""

from .ecod import EcodModel, ecod_fit, ecod_score, ecod_score_many
from .gmm import GmmModel, gmm_fit, gmm_score, gmm_score_many
from .proactive import DetectionResult, LatencyEntry, latency_summary, proactive_detect
from .svdd import SvddModel, svdd_embed, svdd_fit, svdd_score, svdd_score_many
from .threshold import (
    ORIENTATION,
    Detector,
    Threshold,
    calibrate,
    detector_from_doc,
    detector_to_doc,
    fit_detector,
    is_anomaly,
    load_detector,
    save_detector,
    score_many,
)

__all__ = [
    "ORIENTATION",
    "DetectionResult",
    "Detector",
    "EcodModel",
    "GmmModel",
    "LatencyEntry",
    "SvddModel",
    "Threshold",
    "calibrate",
    "detector_from_doc",
    "detector_to_doc",
    "ecod_fit",
    "ecod_score",
    "ecod_score_many",
    "fit_detector",
    "gmm_fit",
    "gmm_score",
    "gmm_score_many",
    "is_anomaly",
    "latency_summary",
    "load_detector",
    "proactive_detect",
    "save_detector",
    "score_many",
    "svdd_embed",
    "svdd_fit",
    "svdd_score",
    "svdd_score_many",
]
