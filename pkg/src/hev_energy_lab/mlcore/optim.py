from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hev_energy_lab.errors import DomainError


@dataclass
class Adam:
    """Adaptive-moment optimizer with bias-corrected moments."""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.lr <= 0.0:
            raise DomainError("learning rate must be positive")

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        self.t += 1
        correction1 = 1.0 - self.beta1**self.t
        correction2 = 1.0 - self.beta2**self.t
        updated = {}
        for name, value in params.items():
            grad = grads.get(name)
            if grad is None:
                updated[name] = value.copy()
                continue
            m = self.m.get(name, np.zeros_like(value))
            v = self.v.get(name, np.zeros_like(value))
            m = self.beta1 * m + (1.0 - self.beta1) * grad
            v = self.beta2 * v + (1.0 - self.beta2) * grad**2
            self.m[name] = m
            self.v[name] = v
            updated[name] = value - self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
        return updated


def optimizer_step(
    params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float, optimizer: Adam | None = None
) -> tuple[dict[str, np.ndarray], Adam]:
    optimizer = optimizer or Adam(lr=lr)
    optimizer.lr = lr
    return optimizer.step(params, grads), optimizer
