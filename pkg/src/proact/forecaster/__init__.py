"""One-step forecaster: decomposition heads plus adaptive graph convolution."""

from .model import (
    ForecastModel,
    ModelShape,
    flatten_params,
    init_model,
    load_model,
    model_from_doc,
    model_to_doc,
    save_model,
    unflatten_params,
)
from .grad import gradients
from .ops import (
    Forecast,
    adjacency,
    agc,
    decompose,
    forward,
    forward_batch,
    loss_batch,
    predict_continuous,
    predict_discrete,
)
from .training import (
    AdamState,
    TrainConfig,
    TrainResult,
    forecast_series,
    persistence_forecast,
    train,
)

__all__ = [
    "AdamState",
    "Forecast",
    "ForecastModel",
    "ModelShape",
    "adjacency",
    "agc",
    "decompose",
    "flatten_params",
    "forecast_series",
    "forward",
    "forward_batch",
    "gradients",
    "init_model",
    "load_model",
    "loss_batch",
    "model_from_doc",
    "model_to_doc",
    "persistence_forecast",
    "predict_continuous",
    "predict_discrete",
    "save_model",
    "train",
    "TrainConfig",
    "TrainResult",
    "unflatten_params",
]
