"""Fully connected networks used by the TD3 actor/critics and the MLP baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hev_energy_lab.errors import DimensionError
from hev_energy_lab.mlcore.activations import activate, activation_grad


@dataclass
class MlpWeights:
    """Layer ``k`` is ``(params["W{k}"], params["b{k}"], activations[k])``."""

    params: dict[str, np.ndarray]
    activations: tuple[str, ...]

    def __post_init__(self) -> None:
        previous = None
        for k in range(len(self.activations)):
            weight = self.params.get(f"W{k}")
            bias = self.params.get(f"b{k}")
            if weight is None or bias is None:
                raise DimensionError(f"layer {k} is missing parameters")
            if weight.ndim != 2 or bias.shape != (weight.shape[1],):
                raise DimensionError(f"layer {k} weight/bias shapes disagree")
            if previous is not None and weight.shape[0] != previous:
                raise DimensionError(f"layer {k} expects {weight.shape[0]} inputs, previous layer gives {previous}")
            previous = weight.shape[1]

    @property
    def sizes(self) -> tuple[int, ...]:
        dims = [self.params["W0"].shape[0]]
        dims.extend(self.params[f"W{k}"].shape[1] for k in range(len(self.activations)))
        return tuple(dims)

    def copy(self) -> "MlpWeights":
        return MlpWeights({k: v.copy() for k, v in self.params.items()}, self.activations)


def init_mlp(sizes: tuple[int, ...] | list[int], activations: tuple[str, ...], rng: np.random.Generator) -> MlpWeights:
    if len(sizes) != len(activations) + 1:
        raise DimensionError("need one activation per layer")
    params = {}
    for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        bound = 1.0 / np.sqrt(fan_in)
        params[f"W{k}"] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        params[f"b{k}"] = rng.uniform(-bound, bound, size=(fan_out,))
    return MlpWeights(params, tuple(activations))


@dataclass
class MlpCache:
    inputs: list[np.ndarray]
    pre: list[np.ndarray]
    outputs: list[np.ndarray]


def mlp_forward(x: np.ndarray, w: MlpWeights) -> tuple[np.ndarray, MlpCache]:
    out = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if out.shape[1] != w.params["W0"].shape[0]:
        raise DimensionError(f"input has {out.shape[1]} features, network expects {w.params['W0'].shape[0]}")
    cache = MlpCache(inputs=[], pre=[], outputs=[])
    for k, name in enumerate(w.activations):
        cache.inputs.append(out)
        z = out @ w.params[f"W{k}"] + w.params[f"b{k}"]
        out = activate(name, z)
        cache.pre.append(z)
        cache.outputs.append(out)
    return out, cache


def mlp_backward(grad_output: np.ndarray, cache: MlpCache, w: MlpWeights) -> tuple[dict[str, np.ndarray], np.ndarray]:
    grads = {}
    delta = np.asarray(grad_output, dtype=np.float64).reshape(cache.outputs[-1].shape)
    for k in range(len(w.activations) - 1, -1, -1):
        delta = delta * activation_grad(w.activations[k], cache.pre[k], cache.outputs[k])
        grads[f"W{k}"] = cache.inputs[k].T @ delta
        grads[f"b{k}"] = delta.sum(axis=0)
        delta = delta @ w.params[f"W{k}"].T
    return grads, delta
