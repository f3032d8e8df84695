"""Diagonal Gaussian mixture fitted by EM, scored by log-likelihood."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError, NumericError

VARIANCE_FLOOR = 1e-6

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class GmmModel:
    """K diagonal components: weights (K,), means (K, D), variances (K, D)."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    loglik_trace: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def _component_logpdf(model: GmmModel, x: np.ndarray) -> np.ndarray:
    """log N(x; mu_k, diag var_k) for every row and component, (T, K)."""
    diff = x[:, None, :] - model.means[None, :, :]
    quad = np.sum(diff * diff / model.variances[None, :, :], axis=2)
    logdet = np.sum(np.log(model.variances), axis=1)
    return -0.5 * (model.dim * LOG_2PI + logdet[None, :] + quad)


def _log_joint(model: GmmModel, x: np.ndarray) -> np.ndarray:
    return _component_logpdf(model, x) + np.log(model.weights)[None, :]


def _logsumexp(a: np.ndarray) -> np.ndarray:
    mx = a.max(axis=1, keepdims=True)
    return (mx + np.log(np.sum(np.exp(a - mx), axis=1, keepdims=True)))[:, 0]


def gmm_score_many(model: GmmModel, x: np.ndarray) -> np.ndarray:
    """Per-row log-likelihood; higher means more normal."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise DataError(f"scoring input shape {x.shape} does not match dimension {model.dim}")
    return _logsumexp(_log_joint(model, x))


def gmm_score(model: GmmModel, x: np.ndarray) -> float:
    return float(gmm_score_many(model, np.asarray(x, dtype=np.float64)[None, :])[0])


def _kmeanspp_means(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: each next center drawn with probability D(x)^2."""
    n = x.shape[0]
    means = np.empty((k, x.shape[1]))
    means[0] = x[rng.integers(n)]
    d2 = np.sum((x - means[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            means[j] = x[rng.integers(n)]
            continue
        means[j] = x[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((x - means[j]) ** 2, axis=1))
    return means


def gmm_fit(
    train: np.ndarray,
    k: int = 4,
    seed: int = 0,
    max_iter: int = 100,
    tol: float = 1e-6,
) -> GmmModel:
    """EM with k-means++-seeded means and floored diagonal covariances.

    An empty component is reinitialized from the point farthest from all
    current means, at most three times per fit.
    """
    x = np.asarray(train, dtype=np.float64)
    if x.ndim != 2:
        raise DataError("training matrix must be 2-dimensional")
    if not np.all(np.isfinite(x)):
        raise DataError("training matrix contains non-finite values")
    if k < 1:
        raise ConfigError(f"K must be >= 1, got {k}")
    n = x.shape[0]
    if n < k:
        raise DataError(f"need at least K={k} rows, got {n}")

    rng = np.random.default_rng(seed)
    global_var = np.maximum(x.var(axis=0), VARIANCE_FLOOR)
    model = GmmModel(
        weights=np.full(k, 1.0 / k),
        means=_kmeanspp_means(x, k, rng),
        variances=np.tile(global_var, (k, 1)),
    )

    model.loglik_trace.append(float(np.mean(_logsumexp(_log_joint(model, x)))))
    reinits = 0
    for _ in range(max_iter):
        log_joint = _log_joint(model, x)
        log_norm = _logsumexp(log_joint)
        resp = np.exp(log_joint - log_norm[:, None])

        counts = resp.sum(axis=0)
        empty = np.flatnonzero(counts < 1e-10)
        if empty.size:
            reinits += empty.size
            if reinits > 3:
                raise NumericError("GMM fit failed: component emptied more than 3 times")
            for j in empty:
                dist = np.min(np.sum((x[:, None, :] - model.means[None]) ** 2, axis=2), axis=1)
                model.means[j] = x[np.argmax(dist)]
                model.variances[j] = global_var
                model.weights[j] = 1.0 / n
            model.weights /= model.weights.sum()
            model.loglik_trace.append(float(np.mean(_logsumexp(_log_joint(model, x)))))
            continue

        model.weights = counts / n
        model.means = (resp.T @ x) / counts[:, None]
        diff = x[:, None, :] - model.means[None, :, :]
        model.variances = np.maximum(
            np.einsum("tk,tkd->kd", resp, diff * diff) / counts[:, None], VARIANCE_FLOOR
        )

        loglik = float(np.mean(_logsumexp(_log_joint(model, x))))
        model.loglik_trace.append(loglik)
        if loglik - model.loglik_trace[-2] < tol:
            break
    return model
