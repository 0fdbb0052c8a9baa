"""Loss gradients dispatched over the forward caches of every architecture."""

from __future__ import annotations

import numpy as np

from hev_energy_lab.errors import ModelStateError
from hev_energy_lab.mlcore.lstm import LstmCache, LstmWeights, lstm_sequence_backward
from hev_energy_lab.mlcore.mlp import MlpCache, MlpWeights, mlp_backward
from hev_energy_lab.mlcore.rnn import RnnCache, RnnWeights, rnn_sequence_backward

SQUARED_ERROR = "squared_error"
EXTERNAL = "external"

Weights = LstmWeights | RnnWeights | MlpWeights
Cache = LstmCache | RnnCache | MlpCache


def squared_error(y: np.ndarray, target: np.ndarray) -> float:
    y = np.asarray(y, dtype=np.float64)
    return float(np.mean((y - np.asarray(target, dtype=np.float64).reshape(y.shape)) ** 2))


def squared_error_grad(y: np.ndarray, target: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    return 2.0 * (y - np.asarray(target, dtype=np.float64).reshape(y.shape)) / y.size


def backprop(
    loss: str,
    cache: Cache | None,
    weights: Weights,
    target: np.ndarray | None = None,
    grad_output: np.ndarray | None = None,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Parameter gradients and input gradient for one forward cache.

    ``squared_error`` differentiates the mean squared error against ``target``;
    ``external`` injects ``grad_output`` at the network output, which is how
    the critic's action gradient is chained through the actor.
    """

    if cache is None:
        raise ModelStateError("backprop called without a forward cache")
    if loss == SQUARED_ERROR:
        if target is None:
            raise ModelStateError("squared-error backprop needs a target")
        output = _cache_output(cache, weights)
        upstream = squared_error_grad(output, target)
    elif loss == EXTERNAL:
        if grad_output is None:
            raise ModelStateError("external backprop needs grad_output")
        upstream = np.asarray(grad_output, dtype=np.float64)
    else:
        raise ModelStateError(f"unknown loss tag {loss!r}")

    if isinstance(cache, LstmCache) and isinstance(weights, LstmWeights):
        return lstm_sequence_backward(upstream, cache, weights)
    if isinstance(cache, RnnCache) and isinstance(weights, RnnWeights):
        return rnn_sequence_backward(upstream, cache, weights)
    if isinstance(cache, MlpCache) and isinstance(weights, MlpWeights):
        return mlp_backward(upstream, cache, weights)
    raise ModelStateError(f"cache {type(cache).__name__} does not belong to {type(weights).__name__}")


def _cache_output(cache: Cache, weights: Weights) -> np.ndarray:
    if isinstance(cache, MlpCache):
        return cache.outputs[-1]
    if isinstance(cache, LstmCache):
        return cache.h_last @ weights.params["W_y"] + weights.params["b_y"]
    return cache.hs[-1] @ weights.params["W_y"] + weights.params["b_y"]
