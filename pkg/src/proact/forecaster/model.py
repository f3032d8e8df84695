"""Trainable tensors of the one-step forecaster and their persistence.

Tensor layout (n = c + d nodes):
    w_trend, w_seas   (N,)  or (c, N, c) in full-head mode -- time-axis maps
    b_trend, b_seas   ()    or (c,)      for the continuous heads
    w_disc, b_disc    (N,), ()           shared across all d*e one-hot channels
    node_emb          (n, b)             adjacency + node-adaptive weights
    w_agc             (b, h, e)          per-node h->e transforms, mixed by node_emb
    w_in, b_in        (h, e*N), (h,)     per-node input map, shared across nodes
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DataError

FORMAT_VERSION = 1

ACTIVATIONS = ("tanh", "relu")


@dataclass(frozen=True)
class ModelShape:
    c: int
    d: int
    e: int
    hidden: int
    emb: int
    window: int
    kernel_size: int = 3
    activation: str = "tanh"
    cardinalities: tuple[int, ...] = ()
    full_continuous_heads: bool = False

    def __post_init__(self):
        if self.c < 0 or self.d < 0 or self.c + self.d < 1:
            raise ConfigError("need c + d >= 1 features")
        if self.d > 0 and self.e < 1:
            raise ConfigError("embedding dim e must be >= 1 when discrete features exist")
        if self.d == 0:
            object.__setattr__(self, "e", max(1, self.e))
        if self.kernel_size % 2 == 0:
            raise ConfigError(f"kernel_size must be odd, got {self.kernel_size}")
        if self.kernel_size > self.window:
            raise ConfigError("kernel_size must be <= window length")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}")
        object.__setattr__(self, "cardinalities", tuple(self.cardinalities))
        if len(self.cardinalities) != self.d:
            raise ConfigError("one cardinality per discrete feature required")
        if any(card < 1 or card > self.e for card in self.cardinalities):
            raise ConfigError("cardinalities must lie in [1, e]")

    @property
    def nodes(self) -> int:
        return self.c + self.d

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "d": self.d,
            "e": self.e,
            "hidden": self.hidden,
            "emb": self.emb,
            "window": self.window,
            "kernel_size": self.kernel_size,
            "activation": self.activation,
            "cardinalities": list(self.cardinalities),
            "full_continuous_heads": self.full_continuous_heads,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelShape":
        kwargs = dict(doc)
        kwargs["cardinalities"] = tuple(kwargs.get("cardinalities", ()))
        return cls(**kwargs)


@dataclass
class ForecastModel:
    shape: ModelShape
    w_trend: np.ndarray
    b_trend: np.ndarray
    w_seas: np.ndarray
    b_seas: np.ndarray
    w_disc: np.ndarray
    b_disc: np.ndarray
    node_emb: np.ndarray
    w_agc: np.ndarray
    w_in: np.ndarray
    b_in: np.ndarray

    def tensors(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "shape"}

    def copy(self) -> "ForecastModel":
        return ForecastModel(self.shape, **{k: v.copy() for k, v in self.tensors().items()})

    def check_finite(self) -> None:
        for name, arr in self.tensors().items():
            if not np.all(np.isfinite(arr)):
                raise DataError(f"tensor {name} contains non-finite entries")


def tensor_shapes(shape: ModelShape) -> dict[str, tuple[int, ...]]:
    N, c, d, e = shape.window, shape.c, shape.d, shape.e
    if shape.full_continuous_heads and c > 0:
        head_w, head_b = (c, N, c), (c,)
    elif c > 0:
        head_w, head_b = (N,), ()
    else:
        head_w, head_b = (0,), (0,)
    disc_w, disc_b = ((N,), ()) if d > 0 else ((0,), (0,))
    return {
        "w_trend": head_w,
        "b_trend": head_b,
        "w_seas": head_w,
        "b_seas": head_b,
        "w_disc": disc_w,
        "b_disc": disc_b,
        "node_emb": (shape.nodes, shape.emb),
        "w_agc": (shape.emb, shape.hidden, e),
        "w_in": (shape.hidden, e * N),
        "b_in": (shape.hidden,),
    }


def _fan_in(name: str, shape: ModelShape) -> int:
    if name in ("w_trend", "w_seas") and shape.full_continuous_heads:
        return shape.window * shape.c
    if name in ("w_trend", "w_seas", "w_disc"):
        return shape.window
    if name == "w_agc":
        return shape.hidden
    return shape.e * shape.window  # w_in


def init_model(shape: ModelShape, seed: int) -> ForecastModel:
    """Seeded init: uniform +-1/sqrt(fan_in) weights, Normal(0, 0.1) embeddings."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shp in tensor_shapes(shape).items():
        if name == "node_emb":
            tensors[name] = 0.1 * rng.standard_normal(shp)
        elif name.startswith("b_") or 0 in shp:
            tensors[name] = np.zeros(shp)
        else:
            bound = 1.0 / np.sqrt(_fan_in(name, shape))
            tensors[name] = rng.uniform(-bound, bound, shp)
    return ForecastModel(shape, **tensors)


def flatten_params(model: ForecastModel) -> np.ndarray:
    return np.concatenate([model.tensors()[name].reshape(-1) for name in sorted(tensor_shapes(model.shape))])


def unflatten_params(shape: ModelShape, theta: np.ndarray) -> ForecastModel:
    shapes = tensor_shapes(shape)
    total = sum(int(np.prod(shp, initial=1)) for shp in shapes.values())
    if theta.size != total:
        raise DataError(f"parameter vector has {theta.size} entries, expected {total}")
    tensors = {}
    pos = 0
    for name in sorted(shapes):
        size = int(np.prod(shapes[name], initial=1))
        tensors[name] = theta[pos : pos + size].reshape(shapes[name]).copy()
        pos += size
    return ForecastModel(shape, **tensors)


def model_to_doc(model: ForecastModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "forecast_model",
        "shape": model.shape.to_dict(),
        "tensors": {name: arr.reshape(-1).tolist() for name, arr in model.tensors().items()},
    }


def model_from_doc(doc: dict) -> ForecastModel:
    if doc.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported model format_version {doc.get('format_version')!r}")
    if doc.get("kind") != "forecast_model":
        raise DataError(f"not a forecast model document: kind={doc.get('kind')!r}")
    shape = ModelShape.from_dict(doc["shape"])
    shapes = tensor_shapes(shape)
    tensors = {}
    for name, shp in shapes.items():
        flat = np.asarray(doc["tensors"][name], dtype=np.float64)
        if flat.size != int(np.prod(shp, initial=1)):
            raise DataError(f"tensor {name} has {flat.size} entries, expected shape {shp}")
        tensors[name] = flat.reshape(shp)
    return ForecastModel(shape, **tensors)


def save_model(model: ForecastModel, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_doc(model), fh)
        fh.write("\n")


def load_model(path: str | Path) -> ForecastModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc
    return model_from_doc(doc)
