"""Forward pass of the forecaster, batched over windows.

Window tensors are float64 throughout:
    cont    (B, N, c)      normalized continuous block
    onehot  (B, N, d, e)   one-hot discrete block
The per-node AGC input X flattens the (e, N) per-node history row-major,
so slot s at time t lands at index s*N + t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, NumericError
from .model import ForecastModel

LOGPROB_FLOOR = -50.0


def decompose(window: np.ndarray, kernel_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Moving-average trend plus residual seasonality for an (..., N, c) block.

    The window is padded with its first value in front and last value behind
    so the centered average is defined at the edges.  trend + seasonal
    reproduces the input exactly.
    """
    if kernel_size % 2 == 0:
        raise DataError(f"kernel_size must be odd, got {kernel_size}")
    window = np.asarray(window, dtype=np.float64)
    pad = (kernel_size - 1) // 2
    axis = window.ndim - 2
    if window.shape[axis] < kernel_size:
        raise DataError("window shorter than kernel")
    pad_widths = [(0, 0)] * window.ndim
    pad_widths[axis] = (pad, pad)
    padded = np.pad(window, pad_widths, mode="edge")
    slid = np.lib.stride_tricks.sliding_window_view(padded, kernel_size, axis=axis)
    trend = slid.mean(axis=-1)
    return trend, window - trend


def adjacency(node_emb: np.ndarray) -> np.ndarray:
    """A = I + row-softmax(ReLU(E E^T)); rows of A - I sum to one."""
    node_emb = np.asarray(node_emb, dtype=np.float64)
    scores = np.maximum(node_emb @ node_emb.T, 0.0)
    shifted = scores - scores.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    soft = expd / expd.sum(axis=1, keepdims=True)
    return np.eye(node_emb.shape[0]) + soft


def _heads_continuous(model: ForecastModel, trend: np.ndarray, seas: np.ndarray) -> np.ndarray:
    if model.shape.c == 0:
        return np.zeros((trend.shape[0], 0))
    if model.shape.full_continuous_heads:
        return (
            np.einsum("bni,oni->bo", trend, model.w_trend)
            + np.einsum("bni,oni->bo", seas, model.w_seas)
            + model.b_trend
            + model.b_seas
        )
    return (
        np.einsum("bnc,n->bc", trend, model.w_trend)
        + np.einsum("bnc,n->bc", seas, model.w_seas)
        + model.b_trend
        + model.b_seas
    )


def _heads_discrete(model: ForecastModel, onehot: np.ndarray) -> np.ndarray:
    if model.shape.d == 0:
        return np.zeros((onehot.shape[0], 0, model.shape.e))
    return np.einsum("bnde,n->bde", onehot, model.w_disc) + model.b_disc


def build_agc_input(shape, cont: np.ndarray, onehot: np.ndarray) -> np.ndarray:
    """Per-node flattened (e*N) history: continuous values in slot 0, one-hots as-is."""
    B, N = cont.shape[0], shape.window
    x4 = np.zeros((B, shape.nodes, shape.e, N))
    if shape.c:
        x4[:, : shape.c, 0, :] = cont.transpose(0, 2, 1)
    if shape.d:
        x4[:, shape.c :, :, :] = onehot.transpose(0, 2, 3, 1)
    return x4.reshape(B, shape.nodes, shape.e * N)


@dataclass
class ForwardCache:
    cont: np.ndarray
    onehot: np.ndarray
    trend: np.ndarray
    seas: np.ndarray
    x: np.ndarray
    hidden: np.ndarray
    scores: np.ndarray
    soft: np.ndarray
    adj: np.ndarray
    agg: np.ndarray
    theta: np.ndarray
    pre: np.ndarray
    z: np.ndarray
    cont_hat: np.ndarray
    logits: np.ndarray


def forward_batch(model: ForecastModel, cont: np.ndarray, onehot: np.ndarray) -> ForwardCache:
    """Run the full model on a batch of windows, keeping intermediates."""
    shape = model.shape
    cont = np.asarray(cont, dtype=np.float64)
    onehot = np.asarray(onehot, dtype=np.float64)
    B = cont.shape[0] if shape.c else onehot.shape[0]
    if shape.c and cont.shape[1:] != (shape.window, shape.c):
        raise DataError(f"continuous block shape {cont.shape} does not match model")
    if shape.d and onehot.shape[1:] != (shape.window, shape.d, shape.e):
        raise DataError(f"one-hot block shape {onehot.shape} does not match model")

    if shape.c:
        trend, seas = decompose(cont, shape.kernel_size)
    else:
        trend = seas = np.zeros((B, shape.window, 0))
    head_c = _heads_continuous(model, trend, seas)
    head_d = _heads_discrete(model, onehot)

    x = build_agc_input(shape, cont, onehot)
    hidden = np.einsum("bnx,hx->bnh", x, model.w_in) + model.b_in

    scores = np.maximum(model.node_emb @ model.node_emb.T, 0.0)
    shifted = scores - scores.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    soft = expd / expd.sum(axis=1, keepdims=True)
    adj = np.eye(shape.nodes) + soft

    agg = np.einsum("nm,bmh->bnh", adj, hidden)
    theta = np.einsum("nk,khe->nhe", model.node_emb, model.w_agc)
    pre = np.einsum("bnh,nhe->bne", agg, theta)
    z = np.tanh(pre) if shape.activation == "tanh" else np.maximum(pre, 0.0)

    cont_hat = head_c + z[:, : shape.c, 0]
    logits = head_d + z[:, shape.c :, :]
    return ForwardCache(cont, onehot, trend, seas, x, hidden, scores, soft, adj, agg, theta, pre, z, cont_hat, logits)


@dataclass(frozen=True)
class Forecast:
    """One-step forecast: continuous values, discrete logits and argmax codes."""

    continuous: np.ndarray
    discrete_logits: np.ndarray
    discrete_codes: np.ndarray


def predict_continuous(model: ForecastModel, window_cont: np.ndarray) -> np.ndarray:
    """Decomposition heads alone (no graph correction) for one (N, c) window."""
    trend, seas = decompose(window_cont[None, :, :], model.shape.kernel_size)
    return _heads_continuous(model, trend, seas)[0]


def predict_discrete(model: ForecastModel, onehot_window: np.ndarray) -> np.ndarray:
    """One-hot head alone for one (N, d, e) window."""
    if model.shape.d == 0:
        raise DataError("model has no discrete head")
    return _heads_discrete(model, onehot_window[None])[0]


def agc(model: ForecastModel, cont: np.ndarray, onehot: np.ndarray) -> np.ndarray:
    """Graph-convolution correction Z for one window, shape (c+d, e)."""
    cache = forward_batch(model, cont[None] if model.shape.c else np.zeros((1, model.shape.window, 0)),
                          onehot[None] if model.shape.d else np.zeros((1, model.shape.window, 0, model.shape.e)))
    return cache.z[0]


def _argmax_codes(logits: np.ndarray, cardinalities: tuple[int, ...]) -> np.ndarray:
    codes = np.zeros(logits.shape[:-2] + (len(cardinalities),), dtype=np.int64)
    for j, card in enumerate(cardinalities):
        codes[..., j] = np.argmax(logits[..., j, :card], axis=-1)
    return codes


def forward(model: ForecastModel, cont_window: np.ndarray, onehot_window: np.ndarray | None = None) -> Forecast:
    """Full one-window forecast: heads plus graph correction."""
    shape = model.shape
    cont = cont_window[None] if shape.c else np.zeros((1, shape.window, 0))
    onehot = onehot_window[None] if shape.d else np.zeros((1, shape.window, 0, shape.e))
    cache = forward_batch(model, cont, onehot)
    logits = cache.logits[0]
    codes = _argmax_codes(logits, shape.cardinalities)
    return Forecast(cache.cont_hat[0], logits, codes)


def _discrete_mask(shape) -> np.ndarray:
    mask = np.zeros((shape.d, shape.e), dtype=bool)
    for j, card in enumerate(shape.cardinalities):
        mask[j, :card] = True
    return mask


def log_softmax_masked(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Row-wise log-softmax over the valid (first cardinality) slots only."""
    neg = np.where(mask, logits, -np.inf)
    mx = neg.max(axis=-1, keepdims=True)
    lse = mx + np.log(np.sum(np.exp(neg - mx), axis=-1, keepdims=True))
    return np.where(mask, logits - lse, -np.inf)


def loss_batch(
    model: ForecastModel,
    cache: ForwardCache,
    target_cont: np.ndarray,
    target_codes: np.ndarray,
    lambda_discrete: float = 1.0,
) -> tuple[float, float, float]:
    """(loss_C, loss_D, total), each averaged over the batch.

    loss_C is the per-window mean squared error over continuous channels,
    loss_D the per-window mean cross-entropy over discrete features with
    softmax restricted to each feature's cardinality and log-probabilities
    floored at LOGPROB_FLOOR.
    """
    shape = model.shape
    B = cache.cont_hat.shape[0]
    if shape.c:
        diff = cache.cont_hat - target_cont
        loss_c = float(np.mean(np.sum(diff * diff, axis=1) / shape.c))
    else:
        loss_c = 0.0
    if shape.d:
        mask = _discrete_mask(shape)
        logp = log_softmax_masked(cache.logits, mask)
        picked = np.take_along_axis(logp, target_codes[:, :, None], axis=2)[:, :, 0]
        picked = np.maximum(picked, LOGPROB_FLOOR)
        loss_d = float(np.mean(np.sum(-picked, axis=1) / shape.d))
    else:
        loss_d = 0.0
    total = loss_c + lambda_discrete * loss_d
    if not np.isfinite(total):
        raise NumericError(f"non-finite loss (loss_C={loss_c}, loss_D={loss_d})")
    return loss_c, loss_d, total
