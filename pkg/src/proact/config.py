"""Pipeline configuration: one JSON file shared by every subcommand."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .data import SynthConfig
from .errors import ConfigError
from .forecaster.training import TrainConfig

DEFAULT_WINDOW = 5


@dataclass(frozen=True)
class DataPaths:
    """Input file locations; None falls back to the output directory."""

    train: str | None = None
    test: str | None = None
    labels: str | None = None
    schema: str | None = None


@dataclass(frozen=True)
class DetectorConfig:
    kind: str = "gmm"
    components: int = 4
    seed: int = 0
    max_iter: int = 100
    tol: float = 1e-6
    epochs: int = 200
    learning_rate: float = 1e-3

    def __post_init__(self):
        if self.kind not in ("gmm", "ecod", "svdd"):
            raise ConfigError(f"detector kind must be gmm, ecod or svdd, got {self.kind!r}")
        if self.components < 1:
            raise ConfigError("detector components must be >= 1")


@dataclass(frozen=True)
class SpectralConfig:
    segment_length: int = 6
    epsilon: float = 1e-9

    def __post_init__(self):
        if self.segment_length < 2:
            raise ConfigError("segment_length must be >= 2")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")


@dataclass(frozen=True)
class PipelineConfig:
    data: DataPaths = field(default_factory=DataPaths)
    window: int = DEFAULT_WINDOW
    horizon: int = 1
    train: TrainConfig = field(default_factory=TrainConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    synth_seed: int = 0
    output_dir: str = "out"
    figures: bool = True

    def __post_init__(self):
        if self.horizon != 1:
            raise ConfigError(f"horizon is fixed at 1, got {self.horizon}")
        if self.window < 2:
            raise ConfigError("window must be >= 2")

    def out_dir(self) -> Path:
        """Output directory; the PROACT_OUT_DIR env var takes precedence."""
        return Path(os.environ.get("PROACT_OUT_DIR") or self.output_dir)

    def data_path(self, name: str) -> Path:
        configured = getattr(self.data, name)
        if configured is not None:
            return Path(configured)
        default_names = {
            "train": "train.csv",
            "test": "test.csv",
            "labels": "labels.csv",
            "schema": "schema.json",
        }
        return self.out_dir() / default_names[name]


def _build(cls, doc: dict, context: str):
    if not isinstance(doc, dict):
        raise ConfigError(f"{context} must be a JSON object")
    try:
        return cls(**doc)
    except TypeError as exc:
        raise ConfigError(f"bad {context} block: {exc}") from exc


def config_from_dict(doc: dict) -> PipelineConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    known = {
        "data",
        "window",
        "horizon",
        "train",
        "detector",
        "spectral",
        "synth",
        "synth_seed",
        "output_dir",
        "figures",
    }
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    kwargs = dict(doc)
    if "data" in kwargs:
        kwargs["data"] = _build(DataPaths, kwargs["data"], "data")
    if "train" in kwargs:
        kwargs["train"] = _build(TrainConfig, kwargs["train"], "train")
    if "detector" in kwargs:
        kwargs["detector"] = _build(DetectorConfig, kwargs["detector"], "detector")
    if "spectral" in kwargs:
        kwargs["spectral"] = _build(SpectralConfig, kwargs["spectral"], "spectral")
    if "synth" in kwargs:
        if not isinstance(kwargs["synth"], dict):
            raise ConfigError("synth must be a JSON object")
        kwargs["synth"] = SynthConfig.from_dict(kwargs["synth"])
    try:
        return PipelineConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad config: {exc}") from exc


def load_config(path: str | Path | None) -> PipelineConfig:
    """Parse the pipeline config; None yields all defaults."""
    if path is None:
        return PipelineConfig()
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(doc)


def config_echo(config: PipelineConfig) -> dict:
    """JSON-ready snapshot of the effective configuration."""
    return {
        "data": {
            "train": str(config.data_path("train")),
            "test": str(config.data_path("test")),
            "labels": str(config.data_path("labels")),
            "schema": str(config.data_path("schema")),
        },
        "window": config.window,
        "horizon": config.horizon,
        "train": dataclasses.asdict(config.train),
        "detector": dataclasses.asdict(config.detector),
        "spectral": dataclasses.asdict(config.spectral),
        "output_dir": str(config.out_dir()),
        "figures": config.figures,
    }
