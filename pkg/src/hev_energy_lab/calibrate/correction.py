"""Error-correction sequence models: training, evaluation, persistence and plant hooks."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from hev_energy_lab.calibrate.dataset import CorrectionDataset, WindowSet
from hev_energy_lab.calibrate.features import COOLANT_FEATURES, REFERENCE_FUEL_FEATURES
from hev_energy_lab.constants import CorrectionTarget, ModelArch
from hev_energy_lab.errors import DimensionError, DomainError, ModelStateError, TrainingDivergedError
from hev_energy_lab.mlcore.backprop import SQUARED_ERROR, backprop, squared_error
from hev_energy_lab.mlcore.lstm import LstmWeights, init_lstm, lstm_sequence_forward
from hev_energy_lab.mlcore.mlp import MlpWeights, init_mlp, mlp_forward
from hev_energy_lab.mlcore.optim import Adam
from hev_energy_lab.mlcore.persistence import load_weights, save_weights
from hev_energy_lab.mlcore.rnn import RnnWeights, init_rnn, rnn_sequence_forward
from hev_energy_lab.mlcore.scaling import StandardScaler
from hev_energy_lab.powertrain.plant import PowerCorrectionTable

LOGGER = logging.getLogger(__name__)

MRE_FLOOR = 1e-9
Weights = LstmWeights | RnnWeights | MlpWeights


class TrainingSettings(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    hidden_dim: int = Field(default=16, ge=1)
    epochs: int = Field(default=60, ge=1)
    batch_size: int = Field(default=128, ge=1)
    learning_rate: float = Field(default=5e-3, gt=0.0)
    seed: int = 7
    holdout: float = Field(default=0.3, gt=0.0, lt=1.0)


@dataclass(frozen=True)
class ErrorMetrics:
    mae: float
    mse: float
    mre: float

    def scaled(self, factor: float) -> "ErrorMetrics":
        """Change units; MRE is dimensionless and stays put."""

        return ErrorMetrics(self.mae * factor, self.mse * factor**2, self.mre)

    def as_dict(self) -> dict[str, float]:
        return {"mae": self.mae, "mse": self.mse, "mre": self.mre}


def error_metrics(predicted: np.ndarray, truth: np.ndarray) -> ErrorMetrics:
    predicted = np.asarray(predicted, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if predicted.size != truth.size:
        raise DimensionError(f"{predicted.size} predictions for {truth.size} truth values")
    if truth.size == 0:
        raise DomainError("cannot score an empty set")
    error = predicted - truth
    return ErrorMetrics(
        mae=float(np.mean(np.abs(error))),
        mse=float(np.mean(error**2)),
        mre=float(np.mean(np.abs(error) / np.maximum(np.abs(truth), MRE_FLOOR))),
    )


def _forward(weights: Weights, xs: np.ndarray):
    if isinstance(weights, LstmWeights):
        return lstm_sequence_forward(xs, weights)
    if isinstance(weights, RnnWeights):
        return rnn_sequence_forward(xs, weights)
    return mlp_forward(xs.reshape(xs.shape[0], -1), weights)


def _rebuild(weights: Weights, params: dict[str, np.ndarray]) -> Weights:
    if isinstance(weights, MlpWeights):
        return MlpWeights(params, weights.activations)
    return type(weights)(params, weights.input_dim, weights.hidden_dim)


@dataclass(eq=False)
class CorrectionModel:
    """Maps a raw feature window to a correction of the physical value at its last step."""

    arch: ModelArch
    weights: Weights
    features: tuple[str, ...]
    window: int
    target: CorrectionTarget
    x_scaler: StandardScaler
    y_scaler: StandardScaler
    seed: int = 0

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        xs = np.asarray(inputs, dtype=np.float64)
        if xs.ndim == 2:
            xs = xs[np.newaxis]
        if xs.shape[1:] != (self.window, len(self.features)):
            raise DimensionError(f"windows must be (N, {self.window}, {len(self.features)}), got {xs.shape}")
        output, _ = _forward(self.weights, self.x_scaler.transform(xs))
        return self.y_scaler.inverse(output).ravel()

    def corrected(self, inputs: np.ndarray, base: np.ndarray) -> np.ndarray:
        value = np.asarray(base, dtype=np.float64) + self.predict(inputs)
        return np.maximum(value, 0.0) if self.target == CorrectionTarget.FUEL else value

    def apply(self, rows: np.ndarray, base: float) -> tuple[float, bool]:
        """Plant hook; until ``window`` rows exist the physical value passes through flagged."""

        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < self.window:
            return float(base), True
        return float(self.corrected(rows[-self.window:][np.newaxis], np.array([base]))[0]), False

    def save(self, path: str | Path) -> Path:
        dims = {
            "window": self.window,
            "features": list(self.features),
            "target": self.target.value,
        }
        if isinstance(self.weights, MlpWeights):
            dims["activations"] = list(self.weights.activations)
        else:
            dims["input_dim"] = self.weights.input_dim
            dims["hidden_dim"] = self.weights.hidden_dim
        return save_weights(
            path,
            self.arch,
            dims,
            self.seed,
            self.weights.params,
            extra={"x_scaler": self.x_scaler.to_dict(), "y_scaler": self.y_scaler.to_dict()},
        )

    @classmethod
    def load(cls, path: str | Path) -> "CorrectionModel":
        payload = load_weights(path)
        arch = ModelArch(payload.arch)
        params = payload.arrays()
        dims = payload.dims
        if arch == ModelArch.MLP:
            weights: Weights = MlpWeights(params, tuple(dims["activations"]))
        elif arch == ModelArch.LSTM:
            weights = LstmWeights(params, int(dims["input_dim"]), int(dims["hidden_dim"]))
        else:
            weights = RnnWeights(params, int(dims["input_dim"]), int(dims["hidden_dim"]))
        try:
            x_scaler = StandardScaler.from_dict(payload.extra["x_scaler"])
            y_scaler = StandardScaler.from_dict(payload.extra["y_scaler"])
        except KeyError as exc:
            raise ModelStateError(f"{path} has no stored scaler {exc}") from exc
        return cls(
            arch=arch,
            weights=weights,
            features=tuple(dims["features"]),
            window=int(dims["window"]),
            target=CorrectionTarget(dims["target"]),
            x_scaler=x_scaler,
            y_scaler=y_scaler,
            seed=payload.seed,
        )


@dataclass
class TrainedCorrection:
    model: CorrectionModel
    validation: ErrorMetrics
    baseline: ErrorMetrics
    loss_history: list[float] = field(default_factory=list)


def init_weights(arch: ModelArch, input_dim: int, window: int, hidden_dim: int, rng: np.random.Generator) -> Weights:
    if arch == ModelArch.LSTM:
        return init_lstm(input_dim, hidden_dim, rng)
    if arch == ModelArch.RNN:
        return init_rnn(input_dim, hidden_dim, rng)
    return init_mlp((window * input_dim, hidden_dim, hidden_dim, 1), ("tanh", "tanh", "linear"), rng)


def train_correction(
    train_set: WindowSet,
    validation_set: WindowSet,
    target: CorrectionTarget,
    arch: ModelArch = ModelArch.LSTM,
    settings: TrainingSettings | None = None,
) -> TrainedCorrection:
    """Mini-batch Adam on the squared error of scaled targets."""

    settings = settings or TrainingSettings()
    if len(train_set) == 0:
        raise DomainError("no complete training windows")
    arch = ModelArch(arch)
    rng = np.random.default_rng(settings.seed)
    window, input_dim = train_set.inputs.shape[1], train_set.inputs.shape[2]
    x_scaler = StandardScaler.fit(train_set.inputs)
    y_scaler = StandardScaler.fit(train_set.targets.reshape(-1, 1))
    xs = x_scaler.transform(train_set.inputs)
    ys = y_scaler.transform(train_set.targets.reshape(-1, 1))
    weights = init_weights(arch, input_dim, window, settings.hidden_dim, rng)
    optimizer = Adam(lr=settings.learning_rate)
    history: list[float] = []
    for epoch in range(settings.epochs):
        order = rng.permutation(len(train_set))
        epoch_loss = 0.0
        for start in range(0, order.size, settings.batch_size):
            batch = order[start:start + settings.batch_size]
            output, cache = _forward(weights, xs[batch])
            loss = squared_error(output, ys[batch])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"{arch.value} {target.value} correction loss diverged in epoch {epoch}",
                    settings.seed,
                    settings.learning_rate,
                )
            grads, _ = backprop(SQUARED_ERROR, cache, weights, target=ys[batch])
            weights = _rebuild(weights, optimizer.step(weights.params, grads))
            epoch_loss += loss * batch.size
        history.append(epoch_loss / order.size)
        LOGGER.debug("%s %s epoch %d loss %.6f", arch.value, target.value, epoch, history[-1])

    model = CorrectionModel(
        arch=arch,
        weights=weights,
        features=train_set.features,
        window=window,
        target=CorrectionTarget(target),
        x_scaler=x_scaler,
        y_scaler=y_scaler,
        seed=settings.seed,
    )
    scored = validation_set if len(validation_set) else train_set
    validation = evaluate_model(model, scored)
    baseline = error_metrics(scored.base, scored.measured)
    LOGGER.info(
        "Trained %s %s correction on %d windows: MAE %.4g (uncorrected %.4g)",
        arch.value,
        target.value,
        len(train_set),
        validation.mae,
        baseline.mae,
    )
    return TrainedCorrection(model=model, validation=validation, baseline=baseline, loss_history=history)


def train_coolant_correction(
    dataset: CorrectionDataset,
    features: tuple[str, ...] = COOLANT_FEATURES,
    arch: ModelArch = ModelArch.LSTM,
    settings: TrainingSettings | None = None,
) -> TrainedCorrection:
    settings = settings or TrainingSettings()
    train_set, validation_set = dataset.split_windows(features, CorrectionTarget.COOLANT, settings.holdout)
    return train_correction(train_set, validation_set, CorrectionTarget.COOLANT, arch, settings)


def train_fuel_correction(
    dataset: CorrectionDataset,
    features: tuple[str, ...] = REFERENCE_FUEL_FEATURES,
    arch: ModelArch = ModelArch.LSTM,
    settings: TrainingSettings | None = None,
) -> TrainedCorrection:
    settings = settings or TrainingSettings()
    train_set, validation_set = dataset.split_windows(features, CorrectionTarget.FUEL, settings.holdout)
    return train_correction(train_set, validation_set, CorrectionTarget.FUEL, arch, settings)


def corrected_fuel(model: CorrectionModel, window_rows: np.ndarray, mdot_a: float) -> tuple[float, bool]:
    """``mdot_a`` plus the predicted correction, floored at 0; incomplete windows return ``mdot_a`` flagged."""

    if model.target != CorrectionTarget.FUEL:
        raise ModelStateError("corrected_fuel needs a fuel correction model")
    return model.apply(window_rows, mdot_a)


def evaluate_model(model: CorrectionModel, windows: WindowSet) -> ErrorMetrics:
    """Corrected value against the measured value over every window."""

    if len(windows) == 0:
        raise DomainError("cannot evaluate on an empty window set")
    return error_metrics(model.corrected(windows.inputs, windows.base), windows.measured)


def fuel_model_comparison(
    dataset: CorrectionDataset,
    models: dict[str, CorrectionModel],
    holdout: float = 0.3,
) -> pd.DataFrame:
    """MAE/MSE/MRE in g/s on held-out engine-on rows for the physical and corrected fuel models."""

    split = dataset.split_row(holdout)
    features = next(iter(models.values())).features if models else REFERENCE_FUEL_FEATURES
    held_out = dataset.windows(features, CorrectionTarget.FUEL, slice(split, None))
    if len(held_out) == 0:
        raise DomainError("no engine-on windows in the held-out part")
    frame = dataset.frame.iloc[held_out.end_index]
    rows = []
    for label, column in (("dynamic", "mdot_d"), ("quasi-static", "mdot_q"), ("averaged", "mdot_a")):
        metrics = error_metrics(frame[column].to_numpy(), held_out.measured).scaled(1e3)
        rows.append({"model": label, **metrics.as_dict()})
    for label, model in models.items():
        windows = dataset.windows(model.features, CorrectionTarget.FUEL, slice(split, None))
        metrics = evaluate_model(model, windows).scaled(1e3)
        rows.append({"model": label, **metrics.as_dict()})
    return pd.DataFrame(rows, columns=["model", "mae", "mse", "mre"])


def fit_static_correction(
    model: CorrectionModel,
    dataset: CorrectionDataset,
    bins: int = 12,
) -> PowerCorrectionTable:
    """Average predicted fuel correction per engine-power bin."""

    if model.target != CorrectionTarget.FUEL:
        raise ModelStateError("static correction needs a fuel correction model")
    windows = dataset.windows(model.features, CorrectionTarget.FUEL)
    if len(windows) == 0:
        raise DomainError("no engine-on windows to fit a static correction")
    delta = model.predict(windows.inputs)
    power = dataset.frame["p_ice"].to_numpy(dtype=np.float64)[windows.end_index]
    edges = np.linspace(power.min(), power.max(), bins + 1)
    which = np.clip(np.digitize(power, edges) - 1, 0, bins - 1)
    centers, means = [], []
    for b in range(bins):
        members = which == b
        if members.any():
            centers.append(float(power[members].mean()))
            means.append(float(delta[members].mean()))
    LOGGER.info("Static fuel correction over %d power bins, mean %.3g g/s", len(centers), 1e3 * float(np.mean(means)))
    return PowerCorrectionTable(powers=np.asarray(centers), delta=np.asarray(means))
