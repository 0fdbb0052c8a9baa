"""Feature ranking for the correction models: boosted-stump importance plus Pearson pruning."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from hev_energy_lab.errors import DimensionError, SelectionError, UndefinedCorrelationError

LOGGER = logging.getLogger(__name__)

FUEL_POOL: tuple[str, ...] = (
    "mdot_ac",
    "p_exh",
    "theta",
    "torque_cmd",
    "T_cool",
    "mdot_egr",
    "egr_valve",
    "omega",
    "mdot_at",
    "VT",
    "eta_vol",
    "p_int",
    "lambda_afr",
    "p_oil",
    "T_int",
)
COOLANT_FEATURES: tuple[str, ...] = ("omega", "T_int", "T_egr", "T_oil", "T_cool_dyn")
# Published endpoint of the fuel-model selection; used unless a run asks for the computed set.
REFERENCE_FUEL_FEATURES: tuple[str, ...] = ("mdot_ac", "theta", "T_cool", "mdot_egr", "egr_valve", "omega")


def pearson(x: np.ndarray | list[float], y: np.ndarray | list[float]) -> float:
    """Two-pass correlation with compensated sums, clipped to [-1, 1]."""

    xs = np.asarray(x, dtype=np.float64).ravel()
    ys = np.asarray(y, dtype=np.float64).ravel()
    if xs.size != ys.size:
        raise DimensionError(f"pearson needs equal lengths, got {xs.size} and {ys.size}")
    if xs.size < 2:
        raise DimensionError("pearson needs at least two samples")
    dx = xs - math.fsum(xs) / xs.size
    dy = ys - math.fsum(ys) / ys.size
    sxx = math.fsum(dx * dx)
    syy = math.fsum(dy * dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation is undefined for a zero-variance input")
    rho = math.fsum(dx * dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, rho))


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    names: tuple[str, ...]
    values: np.ndarray

    def rho(self, a: str, b: str) -> float:
        return float(self.values[self.names.index(a), self.names.index(b)])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=list(self.names), columns=list(self.names))


def correlation_matrix(frame: pd.DataFrame, names: tuple[str, ...] | list[str]) -> CorrelationMatrix:
    """Pairwise Pearson coefficients; pairs involving a constant column are NaN."""

    names = tuple(names)
    values = np.eye(len(names))
    for i, a in enumerate(names):
        for j in range(i + 1, len(names)):
            try:
                rho = pearson(frame[a].to_numpy(), frame[names[j]].to_numpy())
            except UndefinedCorrelationError:
                LOGGER.warning("Correlation of %s with %s is undefined (constant column)", a, names[j])
                rho = float("nan")
            values[i, j] = values[j, i] = rho
    return CorrelationMatrix(names, values)


class BoostingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_stumps: int = Field(default=200, ge=1)
    learning_rate: float = Field(default=0.1, gt=0.0, le=1.0)
    reg_lambda: float = Field(default=1.0, ge=0.0)


@dataclass(frozen=True)
class ImportanceResult:
    weights: dict[str, float]
    degenerate: bool = False

    def ranked(self) -> list[str]:
        return sorted(self.weights, key=lambda name: (-self.weights[name], name))


def _best_split(
    sorted_x: np.ndarray, sorted_g: np.ndarray, reg_lambda: float
) -> tuple[float, int]:
    """Largest gain over split positions of one pre-sorted feature (unit hessians)."""

    n = sorted_g.size
    g_left = np.cumsum(sorted_g)[:-1]
    h_left = np.arange(1, n, dtype=np.float64)
    g_total = float(sorted_g.sum())
    g_right = g_total - g_left
    h_right = n - h_left
    gain = 0.5 * (
        g_left**2 / (h_left + reg_lambda) + g_right**2 / (h_right + reg_lambda) - g_total**2 / (n + reg_lambda)
    )
    # No split between equal values.
    gain = np.where(np.diff(sorted_x) > 0.0, gain, -np.inf)
    if gain.size == 0:
        return -np.inf, -1
    best = int(np.argmax(gain))
    return float(gain[best]), best


def boosted_importance(
    X: np.ndarray | pd.DataFrame,
    y: np.ndarray,
    names: tuple[str, ...] | list[str] | None = None,
    config: BoostingConfig | None = None,
) -> ImportanceResult:
    """Gradient-boosted depth-1 trees on squared loss; importance is total split gain, normalized."""

    config = config or BoostingConfig()
    if isinstance(X, pd.DataFrame):
        names = tuple(names or X.columns)
        X = X[list(names)].to_numpy(dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DimensionError(f"features {X.shape} do not match target of length {y.size}")
    if y.size == 0:
        raise DimensionError("boosted_importance needs a non-empty dataset")
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(X.shape[1]))
    zeros = {name: 0.0 for name in names}
    if np.ptp(y) == 0.0:
        LOGGER.warning("Target is constant; importance is all zero")
        return ImportanceResult(zeros, degenerate=True)

    order = np.argsort(X, axis=0, kind="stable")
    sorted_cols = np.take_along_axis(X, order, axis=0)
    gains = np.zeros(X.shape[1])
    prediction = np.full(y.size, float(y.mean()))
    lam = config.reg_lambda
    for _ in range(config.n_stumps):
        grad = prediction - y
        best_gain, best_feature, best_pos = 0.0, -1, -1
        for j in range(X.shape[1]):
            gain, pos = _best_split(sorted_cols[:, j], grad[order[:, j]], lam)
            if gain > best_gain:
                best_gain, best_feature, best_pos = gain, j, pos
        if best_feature < 0:
            break
        gains[best_feature] += best_gain
        left_rows = order[: best_pos + 1, best_feature]
        left = np.zeros(y.size, dtype=bool)
        left[left_rows] = True
        w_left = -grad[left].sum() / (left.sum() + lam)
        w_right = -grad[~left].sum() / ((~left).sum() + lam)
        prediction += config.learning_rate * np.where(left, w_left, w_right)

    total = gains.sum()
    if total <= 0.0:
        LOGGER.warning("No informative split found; importance is all zero")
        return ImportanceResult(zeros, degenerate=True)
    return ImportanceResult({name: float(g / total) for name, g in zip(names, gains)})


def select_features(
    importance: ImportanceResult,
    corr: CorrelationMatrix,
    k_top: int | None = None,
    corr_threshold: float = 0.9,
) -> list[str]:
    """Keep the ``k_top`` most important features, then drop the weaker of each highly correlated pair."""

    if not 0.0 < corr_threshold <= 1.0:
        raise SelectionError(f"corr_threshold must be in (0, 1], got {corr_threshold}")
    ranked = importance.ranked()
    k_top = len(ranked) if k_top is None else k_top
    if k_top < 1:
        raise SelectionError(f"k_top must be at least 1, got {k_top}")
    kept: list[str] = []
    for name in ranked[:k_top]:
        clash = next(
            (other for other in kept if abs(corr.rho(name, other)) >= corr_threshold - 1e-12),
            None,
        )
        if clash is not None:
            LOGGER.info("Dropping %s: |rho| with %s = %.3f", name, clash, abs(corr.rho(name, clash)))
            continue
        kept.append(name)
    if not kept:
        raise SelectionError("no feature survived selection")
    return kept
