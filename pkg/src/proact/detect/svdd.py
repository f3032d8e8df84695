"""One-class hypersphere scorer with a small bias-free encoder.

The encoder is input -> 32 -> 8 with tanh between, no bias terms anywhere
(biases admit the trivial solution of mapping everything onto the center).
The center is frozen after initialization and training shrinks the mean
squared distance of training embeddings to it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, NumericError

HIDDEN_WIDTH = 32

LATENT_WIDTH = 8

CENTER_EPS = 0.1

WEIGHT_DECAY = 1e-4


@dataclass
class SvddModel:
    w1: np.ndarray
    w2: np.ndarray
    center: np.ndarray
    weight_decay: float = WEIGHT_DECAY

    @property
    def dim(self) -> int:
        return self.w1.shape[1]


def _embed(w1: np.ndarray, w2: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a1 = np.tanh(x @ w1.T)
    return a1, a1 @ w2.T


def svdd_embed(model: SvddModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise DataError(f"scoring input shape {x.shape} does not match dimension {model.dim}")
    return _embed(model.w1, model.w2, x)[1]


def svdd_score_many(model: SvddModel, x: np.ndarray) -> np.ndarray:
    """Squared distance to the center; higher means more anomalous."""
    diff = svdd_embed(model, x) - model.center
    return np.sum(diff * diff, axis=1)


def svdd_score(model: SvddModel, x: np.ndarray) -> float:
    return float(svdd_score_many(model, np.asarray(x, dtype=np.float64)[None, :])[0])


def svdd_fit(
    train: np.ndarray,
    seed: int = 0,
    epochs: int = 200,
    lr: float = 1e-3,
) -> SvddModel:
    """Full-batch Adam on mean squared distance plus L2 weight decay.

    The center is the mean initial embedding of the training data with
    components inside (-0.1, 0.1) pushed out to +-0.1.
    """
    x = np.asarray(train, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DataError("training matrix must be 2-dimensional and nonempty")
    if not np.all(np.isfinite(x)):
        raise DataError("training matrix contains non-finite values")
    n, dim = x.shape

    rng = np.random.default_rng(seed)
    w1 = rng.uniform(-1.0, 1.0, (HIDDEN_WIDTH, dim)) / np.sqrt(dim)
    w2 = rng.uniform(-1.0, 1.0, (LATENT_WIDTH, HIDDEN_WIDTH)) / np.sqrt(HIDDEN_WIDTH)

    _, z0 = _embed(w1, w2, x)
    center = z0.mean(axis=0)
    small = np.abs(center) < CENTER_EPS
    center[small] = np.where(center[small] >= 0, CENTER_EPS, -CENTER_EPS)

    beta1, beta2, eps = 0.9, 0.999, 1e-8
    m1 = np.zeros_like(w1)
    v1 = np.zeros_like(w1)
    m2 = np.zeros_like(w2)
    v2 = np.zeros_like(w2)
    for step in range(1, epochs + 1):
        a1, z = _embed(w1, w2, x)
        r = z - center
        loss = float(np.mean(np.sum(r * r, axis=1)))
        if not np.isfinite(loss):
            raise NumericError(f"SVDD training diverged at epoch {step - 1}")

        g_z = (2.0 / n) * r
        g_w2 = g_z.T @ a1 + WEIGHT_DECAY * w2
        g_a1 = g_z @ w2
        g_y1 = g_a1 * (1.0 - a1 * a1)
        g_w1 = g_y1.T @ x + WEIGHT_DECAY * w1

        bc1 = 1.0 - beta1**step
        bc2 = 1.0 - beta2**step
        for w, g, m, v in ((w1, g_w1, m1, v1), (w2, g_w2, m2, v2)):
            m += (1.0 - beta1) * (g - m)
            v += (1.0 - beta2) * (g * g - v)
            w -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)

    model = SvddModel(w1, w2, center)
    if not np.all(np.isfinite(svdd_score_many(model, x))):
        raise NumericError("SVDD training diverged")
    return model
