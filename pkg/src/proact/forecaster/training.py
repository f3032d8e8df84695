"""Mini-batch Adam training and rolling one-step forecasts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data import Normalizer, RawSeries, WindowBatch, apply_normalizer, make_windows, one_hot_codes
from ..errors import ConfigError, DataError, NumericError
from .grad import gradients
from .model import ForecastModel, ModelShape, init_model, tensor_shapes
from .ops import _argmax_codes, forward_batch, loss_batch


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for the forecaster.

    ``max_iterations`` counts mini-batch Adam updates; ``None`` means five
    epochs over the training windows.
    """

    learning_rate: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lambda_discrete: float = 1.0
    max_iterations: int | None = None
    batch_size: int = 64
    seed: int = 0
    kernel_size: int = 3
    activation: str = "tanh"
    hidden_dim: int = 256
    node_embedding_dim: int = 10
    full_continuous_heads: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.lambda_discrete < 0:
            raise ConfigError("lambda loss weight must be >= 0")
        if self.kernel_size % 2 == 0:
            raise ConfigError("kernel_size must be odd")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per trainable tensor."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros(cls, shape: ModelShape) -> "AdamState":
        shapes = tensor_shapes(shape)
        return cls(
            m={name: np.zeros(shp) for name, shp in shapes.items()},
            v={name: np.zeros(shp) for name, shp in shapes.items()},
        )

    def update(self, model: ForecastModel, grads: dict[str, np.ndarray], config: TrainConfig) -> None:
        self.step += 1
        bc1 = 1.0 - config.beta1**self.step
        bc2 = 1.0 - config.beta2**self.step
        for name, g in grads.items():
            self.m[name] = config.beta1 * self.m[name] + (1.0 - config.beta1) * g
            self.v[name] = config.beta2 * self.v[name] + (1.0 - config.beta2) * (g * g)
            m_hat = self.m[name] / bc1
            v_hat = self.v[name] / bc2
            tensor = getattr(model, name)
            tensor -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)


@dataclass
class TrainResult:
    model: ForecastModel
    loss_trace: list[tuple[float, float, float]] = field(default_factory=list)


def _split_windows(batch: WindowBatch) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(cont windows, one-hot windows, cont targets, code targets)."""
    schema = batch.schema
    cont = batch.inputs[:, :, : schema.c]
    codes = batch.inputs[:, :, schema.c :].astype(np.int64)
    if schema.d:
        flat = one_hot_codes(codes.reshape(-1, schema.d), schema.embedding_dim)
        onehot = flat.reshape(batch.num_windows, batch.window, schema.d, schema.embedding_dim)
    else:
        onehot = np.zeros((batch.num_windows, batch.window, 0, max(1, schema.embedding_dim)))
    target_cont = batch.targets[:, : schema.c]
    target_codes = batch.targets[:, schema.c :].astype(np.int64)
    return cont, onehot, target_cont, target_codes


def shape_for(batch: WindowBatch, config: TrainConfig) -> ModelShape:
    schema = batch.schema
    e = schema.embedding_dim if schema.d else max(1, schema.embedding_dim)
    return ModelShape(
        c=schema.c,
        d=schema.d,
        e=e,
        hidden=config.hidden_dim,
        emb=config.node_embedding_dim,
        window=batch.window,
        kernel_size=config.kernel_size,
        activation=config.activation,
        cardinalities=schema.cardinalities,
        full_continuous_heads=config.full_continuous_heads,
    )


def train(train_windows: WindowBatch, config: TrainConfig) -> TrainResult:
    """Seeded mini-batch Adam over the training windows.

    Windows are reshuffled each epoch; the final partial batch is kept.
    Raises NumericError with the iteration index if the loss diverges.
    """
    if train_windows.num_windows < 1:
        raise DataError("need at least one training window")
    if config.kernel_size > train_windows.window:
        raise ConfigError("kernel_size must be <= window length")
    shape = shape_for(train_windows, config)
    rng = np.random.default_rng(config.seed)
    model = init_model(shape, seed=config.seed)
    state = AdamState.zeros(shape)

    cont, onehot, target_cont, target_codes = _split_windows(train_windows)
    num = train_windows.num_windows
    batches_per_epoch = (num + config.batch_size - 1) // config.batch_size
    total_iters = (
        config.max_iterations if config.max_iterations is not None else 5 * batches_per_epoch
    )

    result = TrainResult(model)
    it = 0
    order = np.arange(num)
    while it < total_iters:
        rng.shuffle(order)
        for start in range(0, num, config.batch_size):
            if it >= total_iters:
                break
            idx = order[start : start + config.batch_size]
            cache = forward_batch(model, cont[idx], onehot[idx])
            try:
                loss_c, loss_d, total = loss_batch(
                    model, cache, target_cont[idx], target_codes[idx], config.lambda_discrete
                )
                grads = gradients(model, cache, target_cont[idx], target_codes[idx], config.lambda_discrete)
            except NumericError as exc:
                raise NumericError(f"training diverged at iteration {it}: {exc}") from exc
            state.update(model, grads, config)
            result.loss_trace.append((loss_c, loss_d, total))
            it += 1
    model.check_finite()
    return result


def forecast_series(model: ForecastModel, normalizer: Normalizer, series: RawSeries) -> RawSeries:
    """Rolling one-step forecasts for timesteps window..T-1.

    Every forecast conditions on the observed history only.  Continuous
    outputs are mapped back to raw units; discrete outputs become argmax
    codes, so the result lives in the same space as the input series.
    """
    shape = model.shape
    N = shape.window
    if series.timesteps <= N:
        raise DataError(f"series too short: {series.timesteps} timesteps for window {N}")
    schema = series.schema
    if schema.c != shape.c or schema.d != shape.d:
        raise DataError("series schema does not match the trained model")

    normalized = apply_normalizer(normalizer, series)
    batch = make_windows(normalized, N)
    cont, onehot, _, _ = _split_windows(batch)

    out = np.empty((batch.num_windows, schema.c + schema.d))
    chunk = 4096
    for start in range(0, batch.num_windows, chunk):
        cache = forward_batch(model, cont[start : start + chunk], onehot[start : start + chunk])
        out[start : start + chunk, : schema.c] = normalizer.inverse_continuous(cache.cont_hat)
        if schema.d:
            out[start : start + chunk, schema.c :] = _argmax_codes(cache.logits, shape.cardinalities)
    labels = series.labels[N:] if series.labels is not None else None
    return RawSeries(out, schema, labels)


def persistence_forecast(series: RawSeries, window: int) -> RawSeries:
    """Last-value baseline aligned with forecast_series output rows."""
    if series.timesteps <= window:
        raise DataError("series too short for persistence baseline")
    values = series.values[window - 1 : -1].copy()
    labels = series.labels[window:] if series.labels is not None else None
    return RawSeries(values, series.schema, labels)
