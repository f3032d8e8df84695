"""Proactive multivariate time-series anomaly detection.

Forecast the next observation from a sliding window, score the forecast
with a detector calibrated on training extremes, and flag anomalies before
the ground-truth value is consulted.
"""

from .errors import ConfigError, DataError, NumericError, ProactError

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "NumericError",
    "ProactError",
    "__version__",
]
