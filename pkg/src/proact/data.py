"""Dataset schema, CSV ingestion, scaling, windowing and synthetic data.

Column order convention: every matrix in this package stores the continuous
columns first (in schema order) followed by the discrete columns (in schema
order), regardless of the order they appear in a CSV file.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError


@dataclass(frozen=True)
class FeatureSchema:
    """Declares which columns are continuous vs discrete.

    Args:
        continuous_cols: names of continuous columns.
        discrete_cols: (name, cardinality) pairs; codes live in [0, cardinality).
        embedding_dim: one-hot width e; defaults to the max cardinality.
    """

    continuous_cols: tuple[str, ...]
    discrete_cols: tuple[tuple[str, int], ...]
    embedding_dim: int = 0

    def __post_init__(self):
        names = list(self.continuous_cols) + [n for n, _ in self.discrete_cols]
        if len(set(names)) != len(names):
            raise ConfigError("column names must be unique across continuous and discrete lists")
        if len(names) == 0:
            raise ConfigError("schema needs at least one column")
        for name, card in self.discrete_cols:
            if card < 1:
                raise ConfigError(f"discrete column {name!r} has cardinality {card}, must be >= 1")
        if self.embedding_dim == 0 and self.discrete_cols:
            object.__setattr__(self, "embedding_dim", max(c for _, c in self.discrete_cols))
        if self.discrete_cols and any(c > self.embedding_dim for _, c in self.discrete_cols):
            raise ConfigError("embedding_dim must be >= every discrete cardinality")

    @property
    def c(self) -> int:
        return len(self.continuous_cols)

    @property
    def d(self) -> int:
        return len(self.discrete_cols)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(card for _, card in self.discrete_cols)

    def to_dict(self) -> dict:
        return {
            "continuous": list(self.continuous_cols),
            "discrete": [{"name": n, "cardinality": c} for n, c in self.discrete_cols],
            "embedding_dim": self.embedding_dim,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureSchema":
        try:
            cont = tuple(doc["continuous"])
            disc = tuple((item["name"], int(item["cardinality"])) for item in doc["discrete"])
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed schema document: {exc}") from exc
        return cls(cont, disc, int(doc.get("embedding_dim", 0)))


def load_schema(path: str | Path) -> FeatureSchema:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read schema file {path}: {exc}") from exc
    return FeatureSchema.from_dict(doc)


def save_schema(schema: FeatureSchema, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(schema.to_dict(), fh, indent=2)
        fh.write("\n")


@dataclass(frozen=True)
class RawSeries:
    """A multivariate series: (timesteps x (c+d)) values plus optional labels.

    Continuous columns hold reals; discrete columns hold integer category
    codes stored in the same float64 matrix.
    """

    values: np.ndarray
    schema: FeatureSchema
    labels: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[1] != self.schema.c + self.schema.d:
            raise DataError(
                f"values shape {values.shape} does not match schema width {self.schema.c + self.schema.d}"
            )
        if not np.all(np.isfinite(values)):
            t, j = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"non-finite value at row {t}, column index {j}")
        for j, (name, card) in enumerate(self.schema.discrete_cols):
            col = values[:, self.schema.c + j]
            if not np.all(col == np.round(col)):
                t = int(np.argmax(col != np.round(col)))
                raise DataError(f"discrete column {name!r} has non-integer value at row {t}")
            if col.size and (col.min() < 0 or col.max() >= card):
                t = int(np.argmax((col < 0) | (col >= card)))
                raise DataError(f"discrete value out of cardinality at row {t}, column {name!r}")
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            object.__setattr__(self, "labels", labels)
            if labels.shape != (values.shape[0],):
                raise DataError(
                    f"label length {labels.shape[0]} does not match {values.shape[0]} timesteps"
                )
            if labels.size and not np.all((labels == 0) | (labels == 1)):
                raise DataError("labels must be 0/1")
        values.setflags(write=False)

    @property
    def timesteps(self) -> int:
        return self.values.shape[0]

    def continuous(self) -> np.ndarray:
        return self.values[:, : self.schema.c]

    def discrete_codes(self) -> np.ndarray:
        return self.values[:, self.schema.c :].astype(np.int64)


def load_csv(path: str | Path, schema: FeatureSchema, labels_path: str | Path | None = None) -> RawSeries:
    """Read a header-ed CSV into a RawSeries, validating against the schema."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    header = [h.strip() for h in header]
    ordered = list(schema.continuous_cols) + [n for n, _ in schema.discrete_cols]
    positions = []
    for name in ordered:
        if name not in header:
            raise DataError(f"{path}: missing column {name!r}")
        positions.append(header.index(name))

    values = np.empty((len(rows), len(ordered)), dtype=np.float64)
    for t, row in enumerate(rows):
        for out_j, pos in enumerate(positions):
            try:
                x = float(row[pos])
            except (ValueError, IndexError) as exc:
                raise DataError(
                    f"{path}: cannot parse cell at row {t}, column {ordered[out_j]!r}: {exc}"
                ) from exc
            if not math.isfinite(x):
                raise DataError(f"{path}: non-finite value at row {t}, column {ordered[out_j]!r}")
            values[t, out_j] = x

    labels = load_labels(labels_path) if labels_path is not None else None
    return RawSeries(values, schema, labels)


def load_labels(path: str | Path) -> np.ndarray:
    """Read a single 0/1 column, no header."""
    try:
        with open(path, newline="") as fh:
            cells = [line.strip() for line in fh if line.strip() != ""]
    except OSError as exc:
        raise DataError(f"cannot read labels {path}: {exc}") from exc
    try:
        labels = np.array([int(float(cell)) for cell in cells], dtype=np.int64)
    except ValueError as exc:
        raise DataError(f"{path}: labels must be 0/1: {exc}") from exc
    if labels.size and not np.all((labels == 0) | (labels == 1)):
        raise DataError(f"{path}: labels must be 0/1")
    return labels


def save_csv(series: RawSeries, path: str | Path) -> None:
    ordered = list(series.schema.continuous_cols) + [n for n, _ in series.schema.discrete_cols]
    c = series.schema.c
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ordered)
        for row in series.values:
            cells = [repr(float(x)) for x in row[:c]]
            cells += [str(int(x)) for x in row[c:]]
            writer.writerow(cells)


def save_labels(labels: np.ndarray, path: str | Path) -> None:
    with open(path, "w") as fh:
        for v in labels:
            fh.write(f"{int(v)}\n")


def one_hot(series: RawSeries) -> np.ndarray:
    """One-hot expand the discrete columns to (timesteps x d x e).

    Slots at or above a column's cardinality stay zero.
    """
    schema = series.schema
    if schema.d == 0:
        raise DataError("no discrete features to one-hot encode")
    return one_hot_codes(series.discrete_codes(), schema.embedding_dim)


def one_hot_codes(codes: np.ndarray, e: int) -> np.ndarray:
    """One-hot a (T x d) integer code matrix into (T x d x e)."""
    T, d = codes.shape
    out = np.zeros((T, d, e), dtype=np.float64)
    t_idx = np.repeat(np.arange(T), d)
    j_idx = np.tile(np.arange(d), T)
    out[t_idx, j_idx, codes.reshape(-1)] = 1.0
    return out


@dataclass(frozen=True)
class Normalizer:
    """Per-continuous-column min/max fitted on the training split."""

    col_min: np.ndarray
    col_max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "col_min", np.asarray(self.col_min, dtype=np.float64))
        object.__setattr__(self, "col_max", np.asarray(self.col_max, dtype=np.float64))
        if np.any(self.col_max < self.col_min):
            raise DataError("normalizer max < min")

    def transform_continuous(self, cont: np.ndarray) -> np.ndarray:
        span = self.col_max - self.col_min
        safe = np.where(span > 0, span, 1.0)
        out = (cont - self.col_min) / safe
        return np.where(span > 0, out, 0.0)

    def inverse_continuous(self, cont: np.ndarray) -> np.ndarray:
        span = self.col_max - self.col_min
        return np.where(span > 0, cont * span + self.col_min, self.col_min)


def fit_normalizer(train: RawSeries) -> Normalizer:
    if train.timesteps < 2:
        raise DataError("need at least 2 timesteps to fit a normalizer")
    cont = train.continuous()
    if cont.shape[1] == 0:
        return Normalizer(np.zeros(0), np.zeros(0))
    return Normalizer(cont.min(axis=0), cont.max(axis=0))


def apply_normalizer(normalizer: Normalizer, series: RawSeries) -> RawSeries:
    """Map continuous columns through the fitted min-max; discrete untouched."""
    values = series.values.copy()
    c = series.schema.c
    values[:, :c] = normalizer.transform_continuous(values[:, :c])
    return RawSeries(values, series.schema, series.labels)


@dataclass(frozen=True)
class WindowBatch:
    """Stride-1 windows (num_windows x N x (c+d)) with horizon-1 targets."""

    inputs: np.ndarray
    targets: np.ndarray
    window: int
    schema: FeatureSchema

    @property
    def num_windows(self) -> int:
        return self.inputs.shape[0]


def make_windows(series: RawSeries, window: int, horizon: int = 1) -> WindowBatch:
    if horizon != 1:
        raise ConfigError(f"horizon must be 1, got {horizon}")
    T = series.timesteps
    if T <= window:
        raise DataError(f"series too short: {T} timesteps for window {window}")
    num = T - window
    sliding = np.lib.stride_tricks.sliding_window_view(series.values, window, axis=0)
    inputs = np.ascontiguousarray(sliding[:num].transpose(0, 2, 1))
    targets = series.values[window:].copy()
    return WindowBatch(inputs, targets, window, series.schema)


def chronological_split(series: RawSeries, validation_fraction: float = 0.2) -> tuple[RawSeries, RawSeries]:
    """Split off the chronological tail as a validation series."""
    if not 0.0 < validation_fraction < 1.0:
        raise ConfigError("validation_fraction must be in (0, 1)")
    cut = int(round(series.timesteps * (1.0 - validation_fraction)))
    cut = max(1, min(series.timesteps - 1, cut))
    head_labels = series.labels[:cut] if series.labels is not None else None
    tail_labels = series.labels[cut:] if series.labels is not None else None
    return (
        RawSeries(series.values[:cut].copy(), series.schema, head_labels),
        RawSeries(series.values[cut:].copy(), series.schema, tail_labels),
    )


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings for the synthetic benchmark-shaped dataset.

    Continuous channels are trend + sinusoid + noise, discrete channels are
    sticky Markov chains.  Test anomalies are level shifts of
    ``anomaly_magnitude`` preceded by a smaller ramp over
    ``precursor_length`` points (the precursor stays unlabeled).
    """

    continuous_channels: int = 3
    cardinalities: tuple[int, ...] = (2, 3)
    train_length: int = 2000
    test_length: int = 1200
    anomaly_count: int = 3
    anomaly_length: int = 20
    anomaly_magnitude: float = 6.0
    precursor_length: int = 5
    precursor_magnitude: float | None = None
    noise_scale: float = 0.02
    trend_slope: float = 1e-4
    period: float = 24.0
    markov_stay: float = 0.9
    embedding_dim: int = 0

    def __post_init__(self):
        if self.continuous_channels < 0 or (self.continuous_channels == 0 and not self.cardinalities):
            raise ConfigError("need at least one channel")
        if self.train_length < 2 or self.test_length < 1:
            raise ConfigError("zero-length series rejected")
        if self.anomaly_count < 0 or self.anomaly_length < 1 or self.precursor_length < 0:
            raise ConfigError("invalid anomaly segment spec")
        if self.anomaly_count * (self.anomaly_length + self.precursor_length + 12) > self.test_length:
            raise ConfigError("anomaly segments do not fit in the test split")
        if self.anomaly_count and self.anomaly_count * self.anomaly_length >= self.test_length:
            raise ConfigError("all-anomalous test split rejected")

    @property
    def ramp_peak(self) -> float:
        if self.precursor_magnitude is not None:
            return self.precursor_magnitude
        return self.anomaly_magnitude / 2.0

    def schema(self) -> FeatureSchema:
        cont = tuple(f"v{i}" for i in range(self.continuous_channels))
        disc = tuple((f"s{j}", card) for j, card in enumerate(self.cardinalities))
        return FeatureSchema(cont, disc, self.embedding_dim)

    def to_dict(self) -> dict:
        return {
            "continuous_channels": self.continuous_channels,
            "cardinalities": list(self.cardinalities),
            "train_length": self.train_length,
            "test_length": self.test_length,
            "anomaly_count": self.anomaly_count,
            "anomaly_length": self.anomaly_length,
            "anomaly_magnitude": self.anomaly_magnitude,
            "precursor_length": self.precursor_length,
            "precursor_magnitude": self.precursor_magnitude,
            "noise_scale": self.noise_scale,
            "trend_slope": self.trend_slope,
            "period": self.period,
            "markov_stay": self.markov_stay,
            "embedding_dim": self.embedding_dim,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthConfig":
        kwargs = dict(doc)
        if "cardinalities" in kwargs:
            kwargs["cardinalities"] = tuple(kwargs["cardinalities"])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad synth config: {exc}") from exc


def _continuous_base(config: SynthConfig, rng: np.random.Generator, length: int, offset: int) -> np.ndarray:
    """Clean continuous channels for timesteps offset..offset+length."""
    t = np.arange(offset, offset + length, dtype=np.float64)
    c = config.continuous_channels
    out = np.empty((length, c))
    for i in range(c):
        level = rng.uniform(-1.0, 1.0)
        amp = rng.uniform(0.6, 1.2)
        phase = rng.uniform(0.0, 2 * np.pi)
        per = config.period * rng.uniform(0.8, 1.25)
        out[:, i] = level + config.trend_slope * t + amp * np.sin(2 * np.pi * t / per + phase)
    out += config.noise_scale * rng.standard_normal((length, c))
    return out


def _markov_chain(card: int, stay: float, rng: np.random.Generator, length: int) -> np.ndarray:
    if card == 1:
        return np.zeros(length, dtype=np.int64)
    trans = np.full((card, card), (1.0 - stay) / (card - 1))
    np.fill_diagonal(trans, stay)
    states = np.empty(length, dtype=np.int64)
    states[0] = rng.integers(card)
    for t in range(1, length):
        states[t] = rng.choice(card, p=trans[states[t - 1]])
    return states


def _segment_starts(config: SynthConfig, rng: np.random.Generator) -> list[int]:
    """One anomaly segment per equal block of the test split, jittered."""
    starts = []
    if config.anomaly_count == 0:
        return starts
    block = config.test_length // config.anomaly_count
    lead = max(config.precursor_length, 6)
    for k in range(config.anomaly_count):
        lo = k * block + lead
        hi = (k + 1) * block - config.anomaly_length
        if hi < lo:
            raise ConfigError("anomaly segments do not fit in the test split")
        starts.append(int(rng.integers(lo, hi + 1)))
    return starts


def synth_generate(config: SynthConfig, seed: int) -> tuple[RawSeries, RawSeries]:
    """Deterministically generate a (train, test) pair with injected anomalies."""
    rng = np.random.default_rng(seed)
    schema = config.schema()
    total = config.train_length + config.test_length

    cont = _continuous_base(config, rng, total, 0)
    disc = np.stack(
        [_markov_chain(card, config.markov_stay, rng, total) for card in config.cardinalities],
        axis=1,
    ) if config.cardinalities else np.zeros((total, 0), dtype=np.int64)

    values = np.concatenate([cont, disc.astype(np.float64)], axis=1)
    train_values = values[: config.train_length]
    test_values = values[config.train_length :].copy()

    labels = np.zeros(config.test_length, dtype=np.int64)
    for start in _segment_starts(config, rng):
        end = start + config.anomaly_length
        test_values[start:end, : config.continuous_channels] += config.anomaly_magnitude
        labels[start:end] = 1
        p = config.precursor_length
        if p > 0:
            ramp = np.linspace(0.0, config.ramp_peak, p + 1)[1:]
            test_values[start - p : start, : config.continuous_channels] += ramp[:, None]

    train = RawSeries(train_values, schema)
    test = RawSeries(test_values, schema, labels)
    return train, test
