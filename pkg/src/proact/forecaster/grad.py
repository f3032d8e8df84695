"""Hand-rolled backward pass for the forecaster.

Returns exact gradients of the batch-averaged total loss with respect to
every trainable tensor.  Each formula mirrors one step of ops.forward_batch
in reverse; the contract is agreement with central finite differences to a
relative error of 1e-4.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericError
from .model import ForecastModel, tensor_shapes
from .ops import LOGPROB_FLOOR, ForwardCache, _discrete_mask, log_softmax_masked


def gradients(
    model: ForecastModel,
    cache: ForwardCache,
    target_cont: np.ndarray,
    target_codes: np.ndarray,
    lambda_discrete: float = 1.0,
) -> dict[str, np.ndarray]:
    shape = model.shape
    B = cache.z.shape[0]
    grads = {name: np.zeros(shp) for name, shp in tensor_shapes(shape).items()}

    # output-layer gradients
    if shape.c:
        g_cont = (2.0 / (B * shape.c)) * (cache.cont_hat - target_cont)
    else:
        g_cont = np.zeros((B, 0))
    if shape.d:
        mask = _discrete_mask(shape)
        logp = log_softmax_masked(cache.logits, mask)
        probs = np.exp(logp)  # masked slots hold -inf and exponentiate to 0
        picked = np.take_along_axis(logp, target_codes[:, :, None], axis=2)[:, :, 0]
        active = picked > LOGPROB_FLOOR  # floored log-probs stop the CE gradient
        onehot_t = np.zeros_like(probs)
        np.put_along_axis(onehot_t, target_codes[:, :, None], 1.0, axis=2)
        g_logits = (lambda_discrete / (B * shape.d)) * active[:, :, None] * (probs - onehot_t)
        g_logits = np.where(mask, g_logits, 0.0)
    else:
        g_logits = np.zeros((B, 0, shape.e))

    # decomposition heads
    if shape.c:
        if shape.full_continuous_heads:
            grads["w_trend"] = np.einsum("bo,bni->oni", g_cont, cache.trend)
            grads["w_seas"] = np.einsum("bo,bni->oni", g_cont, cache.seas)
            grads["b_trend"] = g_cont.sum(axis=0)
            grads["b_seas"] = grads["b_trend"].copy()
        else:
            grads["w_trend"] = np.einsum("bc,bnc->n", g_cont, cache.trend)
            grads["w_seas"] = np.einsum("bc,bnc->n", g_cont, cache.seas)
            grads["b_trend"] = np.asarray(g_cont.sum())
            grads["b_seas"] = np.asarray(g_cont.sum())
    if shape.d:
        grads["w_disc"] = np.einsum("bde,bnde->n", g_logits, cache.onehot)
        grads["b_disc"] = np.asarray(g_logits.sum())

    # graph-correction path
    g_z = np.zeros_like(cache.z)
    if shape.c:
        g_z[:, : shape.c, 0] = g_cont
    if shape.d:
        g_z[:, shape.c :, :] = g_logits
    if shape.activation == "tanh":
        g_pre = g_z * (1.0 - cache.z * cache.z)
    else:
        g_pre = g_z * (cache.pre > 0.0)

    g_theta = np.einsum("bnu,bns->nus", cache.agg, g_pre)
    g_agg = np.einsum("bns,nus->bnu", g_pre, cache.theta)

    grads["w_agc"] = np.einsum("nk,nus->kus", model.node_emb, g_theta)
    g_emb = np.einsum("nus,kus->nk", g_theta, model.w_agc)

    g_hidden = np.einsum("nm,bnh->bmh", cache.adj, g_agg)
    g_adj = np.einsum("bnh,bmh->nm", g_agg, cache.hidden)

    # softmax rows of the adjacency (identity part carries no gradient)
    row_dot = np.sum(g_adj * cache.soft, axis=1, keepdims=True)
    g_scores = cache.soft * (g_adj - row_dot)
    g_scores = np.where(cache.scores > 0.0, g_scores, 0.0)  # ReLU mask
    g_emb = g_emb + (g_scores + g_scores.T) @ model.node_emb
    grads["node_emb"] = g_emb

    grads["w_in"] = np.einsum("bnh,bnx->hx", g_hidden, cache.x)
    grads["b_in"] = g_hidden.sum(axis=(0, 1))

    for name, arr in grads.items():
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"numerical blowup in gradient of {name}")
    return grads
