from __future__ import annotations

import numpy as np

from hev_energy_lab.errors import DomainError


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "linear":
        return z
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return sigmoid(z)
    raise DomainError(f"unknown activation {name!r}")


def activation_grad(name: str, z: np.ndarray, out: np.ndarray) -> np.ndarray:
    """Derivative of the activation at pre-activation ``z`` (output ``out``)."""

    if name == "linear":
        return np.ones_like(z)
    if name == "relu":
        return (z > 0.0).astype(z.dtype)
    if name == "tanh":
        return 1.0 - out**2
    if name == "sigmoid":
        return out * (1.0 - out)
    raise DomainError(f"unknown activation {name!r}")
