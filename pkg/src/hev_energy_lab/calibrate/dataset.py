"""Windowed correction datasets built from truth traces."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from hev_energy_lab.calibrate.truth import TruthTrace
from hev_energy_lab.constants import CorrectionTarget
from hev_energy_lab.errors import DimensionError, DomainError

LOGGER = logging.getLogger(__name__)

FUEL_TARGET = "y_fuel"
COOLANT_TARGET = "y_cool"
DEFAULT_WINDOW = 10
DEFAULT_HOLDOUT = 0.3

# target column, physical base column, measured column
_TARGET_COLUMNS = {
    CorrectionTarget.FUEL: (FUEL_TARGET, "mdot_a", "mdot_r"),
    CorrectionTarget.COOLANT: (COOLANT_TARGET, "T_cool_dyn", "T_cool_r"),
}


def averaged_fuel(mdot_d: float | np.ndarray, mdot_q: float | np.ndarray) -> float | np.ndarray:
    mean = 0.5 * (np.asarray(mdot_d, dtype=np.float64) + np.asarray(mdot_q, dtype=np.float64))
    return float(mean) if mean.ndim == 0 else mean


@dataclass(frozen=True, eq=False)
class WindowSet:
    """``inputs`` is ``(N, M, F)``; ``end_index`` points at the frame row each window predicts."""

    inputs: np.ndarray
    targets: np.ndarray
    base: np.ndarray
    measured: np.ndarray
    end_index: np.ndarray
    features: tuple[str, ...]

    def __len__(self) -> int:
        return int(self.targets.size)


@dataclass(frozen=True, eq=False)
class CorrectionDataset:
    frame: pd.DataFrame
    window: int = DEFAULT_WINDOW
    dt: float = 1.0
    name: str = "dataset"

    def __post_init__(self) -> None:
        if self.window < 1:
            raise DomainError(f"window length must be positive, got {self.window}")
        if len(self.frame) <= self.window:
            raise DomainError(f"dataset of {len(self.frame)} rows is not longer than the window {self.window}")
        if self.frame.isna().any().any():
            missing = [c for c in self.frame.columns if self.frame[c].isna().any()]
            raise DomainError(f"dataset has missing values in {missing}")
        if FUEL_TARGET not in self.frame.columns or COOLANT_TARGET not in self.frame.columns:
            raise DomainError("dataset frame lacks target columns")

    def __len__(self) -> int:
        return len(self.frame)

    @classmethod
    def from_truth(cls, trace: TruthTrace, window: int = DEFAULT_WINDOW) -> "CorrectionDataset":
        frame = trace.frame.copy()
        frame[FUEL_TARGET] = frame["mdot_r"] - frame["mdot_a"]
        frame[COOLANT_TARGET] = frame["T_cool_r"] - frame["T_cool_dyn"]
        return cls(frame=frame.reset_index(drop=True), window=window, dt=trace.dt, name=trace.cycle_name)

    def split_row(self, holdout: float = DEFAULT_HOLDOUT) -> int:
        if not 0.0 < holdout < 1.0:
            raise DomainError(f"holdout fraction must be in (0, 1), got {holdout}")
        return int(round(len(self.frame) * (1.0 - holdout)))

    def windows(
        self,
        features: tuple[str, ...] | list[str],
        target: CorrectionTarget,
        rows: slice | None = None,
    ) -> WindowSet:
        """All complete windows whose rows lie inside ``rows``; fuel windows need the engine on at the end."""

        features = tuple(features)
        unknown = [name for name in features if name not in self.frame.columns]
        if unknown:
            raise DimensionError(f"unknown feature columns {unknown}")
        target_col, base_col, measured_col = _TARGET_COLUMNS[CorrectionTarget(target)]
        start, stop, _ = (rows or slice(None)).indices(len(self.frame))
        values = self.frame[list(features)].to_numpy(dtype=np.float64)
        ends = np.arange(start + self.window - 1, stop)
        if target == CorrectionTarget.FUEL:
            on = self.frame["engine_on"].to_numpy(dtype=bool)
            ends = ends[on[ends]]
        offsets = np.arange(-self.window + 1, 1)
        inputs = values[ends[:, None] + offsets[None, :]] if ends.size else np.empty((0, self.window, len(features)))
        return WindowSet(
            inputs=inputs,
            targets=self.frame[target_col].to_numpy(dtype=np.float64)[ends],
            base=self.frame[base_col].to_numpy(dtype=np.float64)[ends],
            measured=self.frame[measured_col].to_numpy(dtype=np.float64)[ends],
            end_index=ends,
            features=features,
        )

    def split_windows(
        self,
        features: tuple[str, ...] | list[str],
        target: CorrectionTarget,
        holdout: float = DEFAULT_HOLDOUT,
    ) -> tuple[WindowSet, WindowSet]:
        """Chronological split; held-out windows never share rows with training windows."""

        split = self.split_row(holdout)
        return (
            self.windows(features, target, slice(0, split)),
            self.windows(features, target, slice(split, None)),
        )

    def to_csv(self, path: str | Path) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        self.frame.to_csv(target, index=False)
        LOGGER.info("Wrote correction dataset (%d rows) to %s", len(self.frame), target)
        return target

    @classmethod
    def from_csv(cls, path: str | Path, window: int = DEFAULT_WINDOW) -> "CorrectionDataset":
        frame = pd.read_csv(path)
        if "engine_on" in frame.columns:
            frame["engine_on"] = frame["engine_on"].astype(bool)
        dt = float(np.median(np.diff(frame["t"].to_numpy()))) if "t" in frame.columns and len(frame) > 1 else 1.0
        return cls(frame=frame, window=window, dt=dt, name=Path(path).stem)
