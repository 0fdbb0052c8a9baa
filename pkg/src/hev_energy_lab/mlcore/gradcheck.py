"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    worst: tuple[str, tuple[int, ...]] | None
    perturbation: float
    checked: int

    def passed(self, tolerance: float = 1e-4) -> bool:
        return self.max_rel_error <= tolerance


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-12)


def finite_difference_check(
    loss_fn: Callable[[dict[str, np.ndarray]], float],
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    eps: float = 1e-5,
    max_params: int = 200,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Compare ``grads`` with central differences of ``loss_fn`` on a parameter subsample."""

    rng = rng or np.random.default_rng(0)
    probe = {name: value.copy() for name, value in params.items()}
    coordinates = [(name, index) for name in sorted(probe) for index in np.ndindex(probe[name].shape)]
    if len(coordinates) > max_params:
        chosen = rng.choice(len(coordinates), size=max_params, replace=False)
        coordinates = [coordinates[k] for k in sorted(chosen)]

    worst_error = 0.0
    worst = None
    for name, index in coordinates:
        original = probe[name][index]
        probe[name][index] = original + eps
        loss_plus = loss_fn(probe)
        probe[name][index] = original - eps
        loss_minus = loss_fn(probe)
        probe[name][index] = original
        numeric = (loss_plus - loss_minus) / (2.0 * eps)
        error = relative_error(float(grads[name][index]), numeric)
        if error > worst_error:
            worst_error = error
            worst = (name, tuple(int(i) for i in index))
    LOGGER.debug("Gradient check over %d parameters: max relative error %.3e", len(coordinates), worst_error)
    return GradCheckReport(max_rel_error=worst_error, worst=worst, perturbation=eps, checked=len(coordinates))
