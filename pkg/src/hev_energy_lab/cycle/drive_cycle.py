"""Drive-cycle ingestion and road-load demand power."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from hev_energy_lab.config import cycles_dir
from hev_energy_lab.constants import AIR_DENSITY, GRAVITY
from hev_energy_lab.errors import CycleParseError, CycleValidationError, DomainError

LOGGER = logging.getLogger(__name__)

CSV_HEADER = "time_s,speed_mps"
BUILTIN_CYCLES = ("nedc", "urban300")


class VehicleParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    mass: float = Field(default=1830.0, gt=0.0)
    rolling_resist: float = Field(default=0.013, gt=0.0, lt=0.1)
    drag_coeff: float = Field(default=0.325, gt=0.0)
    frontal_area: float = Field(default=2.3, gt=0.0)
    air_density: float = Field(default=AIR_DENSITY, gt=0.0)
    gravity: float = Field(default=GRAVITY, gt=0.0)


class HorizonConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    t_avg: float = Field(default=30.0, gt=0.0)
    t_fx: float = Field(default=10.0, gt=0.0)
    dt: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def _check_multiples(self) -> "HorizonConfig":
        for name in ("t_avg", "t_fx"):
            steps = getattr(self, name) / self.dt
            if abs(steps - round(steps)) > 1e-9:
                raise ValueError(f"{name} must be an integer multiple of dt")
        return self

    @property
    def avg_steps(self) -> int:
        return int(round(self.t_avg / self.dt))

    @property
    def fx_steps(self) -> int:
        return int(round(self.t_fx / self.dt))


@dataclass(frozen=True, eq=False)
class DriveCycle:
    name: str
    dt: float
    time: np.ndarray
    speed: np.ndarray

    def __post_init__(self) -> None:
        if self.time.ndim != 1 or self.time.shape != self.speed.shape:
            raise CycleValidationError("time and speed must be 1-D arrays of equal length")
        if len(self.time) == 0:
            raise CycleValidationError("cycle has no samples")
        if self.time[0] != 0.0:
            raise CycleValidationError("first sample must be at t=0")
        if len(self.time) > 1 and not np.allclose(np.diff(self.time), self.dt):
            raise CycleValidationError("samples must be evenly spaced by dt")
        if np.any(self.speed < 0.0):
            raise CycleValidationError("speed must be non-negative")
        self.time.setflags(write=False)
        self.speed.setflags(write=False)

    def __len__(self) -> int:
        return len(self.time)

    @property
    def duration(self) -> float:
        return float(self.time[-1])

    @cached_property
    def acceleration(self) -> np.ndarray:
        if len(self.speed) < 2:
            return np.zeros_like(self.speed)
        return np.gradient(self.speed, self.dt)

    @property
    def distance(self) -> float:
        return float(np.sum(self.speed) * self.dt)

    def index_at(self, t: float) -> int:
        if t < -1e-9 or t > self.duration + 1e-9:
            raise DomainError(f"t={t} outside cycle span [0, {self.duration}]")
        return int(round(t / self.dt))


def _parse_rows(path: Path) -> tuple[np.ndarray, np.ndarray]:
    times: list[float] = []
    speeds: list[float] = []
    header_seen = False
    with path.open("r", encoding="utf-8") as file:
        for line_number, raw in enumerate(file, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen and line.replace(" ", "") == CSV_HEADER:
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise CycleParseError(f"expected 2 columns, got {len(parts)}", line_number)
            try:
                t_value, v_value = float(parts[0]), float(parts[1])
            except ValueError as exc:
                raise CycleParseError(f"non-numeric value in {line!r}", line_number) from exc
            if not (np.isfinite(t_value) and np.isfinite(v_value)):
                raise CycleParseError(f"non-finite value in {line!r}", line_number)
            if times and t_value <= times[-1]:
                raise CycleValidationError(f"time not strictly increasing at line {line_number}")
            times.append(t_value)
            speeds.append(v_value)
    if not times:
        raise CycleValidationError(f"no samples in {path}")
    return np.asarray(times, dtype=np.float64), np.asarray(speeds, dtype=np.float64)


def resolve_cycle_path(name_or_path: str) -> Path:
    candidate = Path(name_or_path)
    if candidate.suffix == ".csv" or candidate.exists():
        return candidate
    bundled = cycles_dir() / f"{name_or_path.lower()}.csv"
    if not bundled.exists():
        raise CycleValidationError(
            f"unknown cycle {name_or_path!r}; expected a CSV path or one of {', '.join(BUILTIN_CYCLES)} "
            f"present under {cycles_dir()}"
        )
    return bundled


def load_cycle(path: str | Path, dt: float = 1.0) -> DriveCycle:
    if dt <= 0.0:
        raise DomainError("dt must be positive")
    resolved = resolve_cycle_path(str(path))
    if not resolved.exists():
        raise CycleValidationError(f"cycle file not found: {resolved}")
    times, speeds = _parse_rows(resolved)
    if times[0] != 0.0:
        raise CycleValidationError("first sample must be at t=0")
    if np.any(speeds < 0.0):
        raise CycleValidationError("speed must be non-negative")

    n_samples = int(np.floor(times[-1] / dt + 1e-9)) + 1
    grid = np.arange(n_samples, dtype=np.float64) * dt
    resampled = np.interp(grid, times, speeds)
    LOGGER.debug("Loaded cycle %s: %d samples, dt=%.3f", resolved.stem, n_samples, dt)
    return DriveCycle(name=resolved.stem, dt=dt, time=grid, speed=resampled)


def cycle_from_speeds(name: str, speeds: np.ndarray | list[float], dt: float = 1.0) -> DriveCycle:
    values = np.asarray(speeds, dtype=np.float64).copy()
    return DriveCycle(name=name, dt=dt, time=np.arange(len(values), dtype=np.float64) * dt, speed=values)


def road_load_power(v: float | np.ndarray, a: float | np.ndarray, p: VehicleParams) -> float | np.ndarray:
    force = (
        p.mass * a
        + p.mass * p.gravity * p.rolling_resist
        + 0.5 * p.air_density * p.drag_coeff * p.frontal_area * np.square(v)
    )
    return v * force


def demand_power(cycle: DriveCycle, t: float, p: VehicleParams) -> float:
    index = cycle.index_at(t)
    return float(road_load_power(cycle.speed[index], cycle.acceleration[index], p))


def demand_profile(cycle: DriveCycle, p: VehicleParams) -> np.ndarray:
    return np.asarray(road_load_power(cycle.speed, cycle.acceleration, p), dtype=np.float64)


def future_speed_window(cycle: DriveCycle, t: float, cfg: HorizonConfig) -> np.ndarray:
    if t < 0.0:
        raise DomainError("t must be non-negative")
    start = int(round(t / cycle.dt))
    indices = np.minimum(np.arange(start, start + cfg.fx_steps + 1), len(cycle) - 1)
    return cycle.speed[indices].copy()


def average_demand_power(history: np.ndarray | list[float], cfg: HorizonConfig) -> float:
    values = np.asarray(history, dtype=np.float64)
    if values.size == 0:
        raise DomainError("demand history is empty")
    window = values[-min(cfg.avg_steps, values.size):]
    return float(np.mean(window))
