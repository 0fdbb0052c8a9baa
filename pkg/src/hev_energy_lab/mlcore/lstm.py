"""Peephole LSTM with a linear read-out head, forward and backward in numpy.

Arrays are batched: inputs ``(B, D)`` per step, sequences ``(B, T, D)``,
hidden and cell states ``(B, H)``. Peephole weights are vectors applied
element-wise to the cell state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hev_energy_lab.errors import DimensionError, DomainError
from hev_energy_lab.mlcore.activations import sigmoid

GATES = ("i", "f", "c", "o")


@dataclass
class LstmWeights:
    params: dict[str, np.ndarray]
    input_dim: int
    hidden_dim: int

    def __post_init__(self) -> None:
        expected = lstm_shapes(self.input_dim, self.hidden_dim)
        for name, shape in expected.items():
            if name not in self.params:
                raise DimensionError(f"missing LSTM parameter {name}")
            if self.params[name].shape != shape:
                raise DimensionError(f"{name} has shape {self.params[name].shape}, expected {shape}")

    def copy(self) -> "LstmWeights":
        return LstmWeights({k: v.copy() for k, v in self.params.items()}, self.input_dim, self.hidden_dim)


def lstm_shapes(input_dim: int, hidden_dim: int) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    for gate in GATES:
        shapes[f"W_x{gate}"] = (input_dim, hidden_dim)
        shapes[f"W_h{gate}"] = (hidden_dim, hidden_dim)
        shapes[f"b_{gate}"] = (hidden_dim,)
    for gate in ("i", "f", "o"):
        shapes[f"w_c{gate}"] = (hidden_dim,)
    shapes["W_y"] = (hidden_dim, 1)
    shapes["b_y"] = (1,)
    return shapes


def init_lstm(input_dim: int, hidden_dim: int, rng: np.random.Generator) -> LstmWeights:
    """Uniform in ±1/sqrt(fan_in); biases start at zero."""

    params = {}
    for name, shape in lstm_shapes(input_dim, hidden_dim).items():
        if name.startswith("b_"):
            params[name] = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(shape[0])
            params[name] = rng.uniform(-bound, bound, size=shape)
    return LstmWeights(params, input_dim, hidden_dim)


@dataclass
class LstmCellCache:
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c: np.ndarray
    tanh_c: np.ndarray


@dataclass
class LstmCache:
    steps: list[LstmCellCache]
    h_last: np.ndarray


def lstm_cell_forward(
    x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray, w: LstmWeights
) -> tuple[np.ndarray, np.ndarray, LstmCellCache]:
    x = np.atleast_2d(x)
    h_prev = np.atleast_2d(h_prev)
    c_prev = np.atleast_2d(c_prev)
    if x.shape[1] != w.input_dim:
        raise DimensionError(f"input has {x.shape[1]} features, cell expects {w.input_dim}")
    if h_prev.shape[1] != w.hidden_dim or c_prev.shape != h_prev.shape or h_prev.shape[0] != x.shape[0]:
        raise DimensionError("hidden/cell state shapes do not match the cell")
    p = w.params
    i = sigmoid(x @ p["W_xi"] + h_prev @ p["W_hi"] + p["w_ci"] * c_prev + p["b_i"])
    f = sigmoid(x @ p["W_xf"] + h_prev @ p["W_hf"] + p["w_cf"] * c_prev + p["b_f"])
    g = np.tanh(x @ p["W_xc"] + h_prev @ p["W_hc"] + p["b_c"])
    c = f * c_prev + i * g
    o = sigmoid(x @ p["W_xo"] + h_prev @ p["W_ho"] + p["w_co"] * c + p["b_o"])
    tanh_c = np.tanh(c)
    h = o * tanh_c
    return h, c, LstmCellCache(x=x, h_prev=h_prev, c_prev=c_prev, i=i, f=f, g=g, o=o, c=c, tanh_c=tanh_c)


def lstm_cell_backward(
    dh: np.ndarray, dc_next: np.ndarray, cache: LstmCellCache, w: LstmWeights, grads: dict[str, np.ndarray]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Accumulate parameter gradients into ``grads``; return (dx, dh_prev, dc_prev)."""

    p = w.params
    da_o = dh * cache.tanh_c * cache.o * (1.0 - cache.o)
    dc = dc_next + dh * cache.o * (1.0 - cache.tanh_c**2) + da_o * p["w_co"]
    da_f = dc * cache.c_prev * cache.f * (1.0 - cache.f)
    da_i = dc * cache.g * cache.i * (1.0 - cache.i)
    da_c = dc * cache.i * (1.0 - cache.g**2)
    pre = {"i": da_i, "f": da_f, "c": da_c, "o": da_o}

    dx = np.zeros_like(cache.x)
    dh_prev = np.zeros_like(cache.h_prev)
    for gate, delta in pre.items():
        grads[f"W_x{gate}"] += cache.x.T @ delta
        grads[f"W_h{gate}"] += cache.h_prev.T @ delta
        grads[f"b_{gate}"] += delta.sum(axis=0)
        dx += delta @ p[f"W_x{gate}"].T
        dh_prev += delta @ p[f"W_h{gate}"].T
    grads["w_ci"] += (da_i * cache.c_prev).sum(axis=0)
    grads["w_cf"] += (da_f * cache.c_prev).sum(axis=0)
    grads["w_co"] += (da_o * cache.c).sum(axis=0)
    dc_prev = dc * cache.f + da_i * p["w_ci"] + da_f * p["w_cf"]
    return dx, dh_prev, dc_prev


def lstm_sequence_forward(xs: np.ndarray, w: LstmWeights) -> tuple[np.ndarray, LstmCache]:
    """Run a window from zero state; the last hidden state feeds the scalar head."""

    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim == 2:
        xs = xs[np.newaxis, :, :]
    if xs.ndim != 3:
        raise DimensionError("sequence must have shape (batch, steps, features)")
    if xs.shape[1] == 0:
        raise DomainError("sequence is empty")
    batch = xs.shape[0]
    h = np.zeros((batch, w.hidden_dim))
    c = np.zeros((batch, w.hidden_dim))
    steps = []
    for t in range(xs.shape[1]):
        h, c, step = lstm_cell_forward(xs[:, t, :], h, c, w)
        steps.append(step)
    y = h @ w.params["W_y"] + w.params["b_y"]
    return y, LstmCache(steps=steps, h_last=h)


def lstm_sequence_backward(dy: np.ndarray, cache: LstmCache, w: LstmWeights) -> tuple[dict[str, np.ndarray], np.ndarray]:
    grads = {name: np.zeros_like(value) for name, value in w.params.items()}
    dy = np.asarray(dy, dtype=np.float64).reshape(-1, 1)
    grads["W_y"] += cache.h_last.T @ dy
    grads["b_y"] += dy.sum(axis=0)
    dh = dy @ w.params["W_y"].T
    dc = np.zeros_like(dh)
    dxs = []
    for step in reversed(cache.steps):
        dx, dh, dc = lstm_cell_backward(dh, dc, step, w, grads)
        dxs.append(dx)
    return grads, np.stack(dxs[::-1], axis=1)
