"""Vanilla tanh recurrent cell with a scalar read-out, the recurrent baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hev_energy_lab.errors import DimensionError, DomainError


@dataclass
class RnnWeights:
    params: dict[str, np.ndarray]
    input_dim: int
    hidden_dim: int

    def __post_init__(self) -> None:
        for name, shape in rnn_shapes(self.input_dim, self.hidden_dim).items():
            if self.params.get(name) is None or self.params[name].shape != shape:
                raise DimensionError(f"RNN parameter {name} missing or not shaped {shape}")

    def copy(self) -> "RnnWeights":
        return RnnWeights({k: v.copy() for k, v in self.params.items()}, self.input_dim, self.hidden_dim)


def rnn_shapes(input_dim: int, hidden_dim: int) -> dict[str, tuple[int, ...]]:
    return {
        "W_xh": (input_dim, hidden_dim),
        "W_hh": (hidden_dim, hidden_dim),
        "b_h": (hidden_dim,),
        "W_y": (hidden_dim, 1),
        "b_y": (1,),
    }


def init_rnn(input_dim: int, hidden_dim: int, rng: np.random.Generator) -> RnnWeights:
    params = {}
    for name, shape in rnn_shapes(input_dim, hidden_dim).items():
        if name.startswith("b_"):
            params[name] = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(shape[0])
            params[name] = rng.uniform(-bound, bound, size=shape)
    return RnnWeights(params, input_dim, hidden_dim)


@dataclass
class RnnCache:
    xs: np.ndarray
    hs: list[np.ndarray]


def rnn_sequence_forward(xs: np.ndarray, w: RnnWeights) -> tuple[np.ndarray, RnnCache]:
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim == 2:
        xs = xs[np.newaxis, :, :]
    if xs.ndim != 3 or xs.shape[2] != w.input_dim:
        raise DimensionError(f"sequence must have shape (batch, steps, {w.input_dim})")
    if xs.shape[1] == 0:
        raise DomainError("sequence is empty")
    p = w.params
    hs = [np.zeros((xs.shape[0], w.hidden_dim))]
    for t in range(xs.shape[1]):
        hs.append(np.tanh(xs[:, t, :] @ p["W_xh"] + hs[-1] @ p["W_hh"] + p["b_h"]))
    y = hs[-1] @ p["W_y"] + p["b_y"]
    return y, RnnCache(xs=xs, hs=hs)


def rnn_sequence_backward(dy: np.ndarray, cache: RnnCache, w: RnnWeights) -> tuple[dict[str, np.ndarray], np.ndarray]:
    p = w.params
    grads = {name: np.zeros_like(value) for name, value in p.items()}
    dy = np.asarray(dy, dtype=np.float64).reshape(-1, 1)
    grads["W_y"] += cache.hs[-1].T @ dy
    grads["b_y"] += dy.sum(axis=0)
    dh = dy @ p["W_y"].T
    dxs = np.zeros_like(cache.xs)
    for t in range(cache.xs.shape[1] - 1, -1, -1):
        da = dh * (1.0 - cache.hs[t + 1] ** 2)
        grads["W_xh"] += cache.xs[:, t, :].T @ da
        grads["W_hh"] += cache.hs[t].T @ da
        grads["b_h"] += da.sum(axis=0)
        dxs[:, t, :] = da @ p["W_xh"].T
        dh = da @ p["W_hh"].T
    return grads, dxs
