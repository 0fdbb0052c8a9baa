"""Run configuration, report schema and workflow state for scenario runs."""

from __future__ import annotations

import hashlib
import math
from typing import Any, Literal, TypeVar

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from hev_energy_lab.config import AppConfig
from hev_energy_lab.constants import SOC_MAX, SOC_MIN, FuelAccounting, StrategyTag
from hev_energy_lab.cycle.drive_cycle import HorizonConfig, VehicleParams
from hev_energy_lab.ems.context import EmsContext
from hev_energy_lab.ems.dp import DpGrid
from hev_energy_lab.errors import ConfigError
from hev_energy_lab.rlagent.td3 import Hyperparameters

REPORT_SCHEMA_VERSION = 1
DISTURBANCE_LEVELS = (0.0, 0.05, 0.10, 0.15, 0.20)

ModelT = TypeVar("ModelT", bound=BaseModel)


class StateModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _apply_overrides(model: type[ModelT], prefix: str, overrides: dict[str, str], **base: Any) -> ModelT:
    values = dict(base)
    for key, raw in overrides.items():
        group, _, name = key.partition(".")
        if group != prefix:
            continue
        if name not in model.model_fields:
            raise ConfigError(f"unknown override {key!r}")
        values[name] = raw
    return model.model_validate(values)


class RunConfig(StateModel):
    cycle: str = "urban300"
    strategy: StrategyTag = StrategyTag.CONST_EF
    seed: int = 7
    dt: float = Field(default=1.0, gt=0.0)
    soc_init: float = 0.34
    soc_target: float = 0.34
    disturbance: float = Field(default=0.0, ge=0.0, le=0.5)
    tau: float = Field(default=3.0, ge=0.0)
    episodes: int = Field(default=50, ge=0)
    hidden_sizes: tuple[int, ...] = (64, 64)
    t_avg: float = Field(default=30.0, gt=0.0)
    t_fx: float = Field(default=10.0, gt=0.0)
    window_m: int = Field(default=10, ge=1)
    fuel_model: FuelAccounting = FuelAccounting.STATIC
    ef: float | None = Field(default=None, ge=0.5, le=2.0)
    kp: float = Field(default=5.0, ge=2.0, le=15.0)
    ki: float = Field(default=0.1, ge=0.05, le=0.5)
    ef_init: float = Field(default=1.25, ge=0.5, le=2.0)
    policy_path: str = ""
    fuel_correction_path: str = ""
    coolant_correction_path: str = ""
    bsfc_map: str = ""
    battery_curve: str = ""
    mg1_map: str = ""
    mg2_map: str = ""
    output_dir: str = "./storage/runs"
    results_db: str = ""
    full: bool = False
    overrides: dict[str, str] = Field(default_factory=dict)

    @field_validator("soc_init", "soc_target")
    @classmethod
    def _check_soc(cls, value: float) -> float:
        if not SOC_MIN <= value <= SOC_MAX:
            raise ValueError(f"SOC {value} outside [{SOC_MIN}, {SOC_MAX}]")
        return value

    @field_validator("hidden_sizes")
    @classmethod
    def _check_sizes(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if not value or min(value) <= 0:
            raise ValueError("hidden_sizes must list positive widths")
        return value

    @model_validator(mode="after")
    def _check_correction(self) -> "RunConfig":
        if self.fuel_model == FuelAccounting.CORRECTED and not self.fuel_correction_path:
            raise ValueError("corrected fuel model needs fuel_correction_path")
        return self

    @classmethod
    def from_app_config(cls, config: AppConfig, **updates: Any) -> "RunConfig":
        values: dict[str, Any] = {
            "cycle": "nedc" if config.full and config.cycle == "urban300" else config.cycle,
            "strategy": config.strategy,
            "seed": config.seed,
            "dt": config.dt,
            "soc_init": config.soc_init,
            "soc_target": config.soc_target,
            "disturbance": config.disturbance,
            "tau": config.tau,
            "episodes": config.episodes,
            "hidden_sizes": config.hidden_sizes,
            "t_avg": config.t_avg,
            "t_fx": config.t_fx,
            "window_m": config.window_m,
            "bsfc_map": config.bsfc_map,
            "battery_curve": config.battery_curve,
            "mg1_map": config.mg1_map,
            "mg2_map": config.mg2_map,
            "output_dir": config.output_dir,
            "results_db": config.results_db,
            "full": config.full,
            "overrides": dict(config.overrides),
        }
        values.update({key: value for key, value in updates.items() if value is not None})
        return cls.model_validate(values)

    def config_hash(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode("utf-8")).hexdigest()[:16]

    def vehicle(self) -> VehicleParams:
        return _apply_overrides(VehicleParams, "vehicle", self.overrides)

    def horizon(self) -> HorizonConfig:
        return HorizonConfig(t_avg=self.t_avg, t_fx=self.t_fx, dt=self.dt)

    def ems_context(self) -> EmsContext:
        return _apply_overrides(EmsContext, "ems", self.overrides, soc_ref=self.soc_target)

    def dp_grid(self) -> DpGrid:
        return _apply_overrides(DpGrid, "dp", self.overrides)

    def hyperparameters(self) -> Hyperparameters:
        return _apply_overrides(
            Hyperparameters, "hp", self.overrides, episodes=self.episodes, hidden_sizes=self.hidden_sizes
        )


class DisturbanceSpec(StateModel):
    """Uniform multiplicative noise ``1 + U(-level, level)`` on every normalized state channel."""

    level: float = Field(default=0.0, ge=0.0, le=0.5)
    channels: Literal["all"] = "all"
    seed: int = 0


class TraceRow(StateModel):
    t: float
    v: float
    soc: float
    p_ice: float
    p_bat: float
    ef: float | None = None
    T_cool: float
    fuel_l: float
    engine_on: bool

    @field_validator("ef", mode="before")
    @classmethod
    def _nan_to_none(cls, value: Any) -> Any:
        if isinstance(value, float) and math.isnan(value):
            return None
        return value


class MetricsReport(StateModel):
    schema_version: Literal[1] = REPORT_SCHEMA_VERSION
    strategy: StrategyTag
    cycle: str
    seed: int
    soc_init: float
    final_soc_pct: float
    fuel_l: float
    distance_km: float = Field(ge=0.0)
    fuel_economy: float = Field(description="L/100 km")
    corrected_fuel_l: float
    corrected_fuel_economy: float = Field(description="L/100 km at the initial SOC")
    start_stop_count: int = Field(ge=0)
    fluctuation_pct: float = 0.0
    fuel_savings_pct: float | None = None
    terminated: bool = False
    trace: list[TraceRow] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_economy(self) -> "MetricsReport":
        expected = self.fuel_l * 100.0 / self.distance_km if self.distance_km > 0.0 else 0.0
        if not math.isclose(self.fuel_economy, expected, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError("fuel_economy does not match fuel_l and distance_km")
        return self

    def summary(self) -> dict[str, Any]:
        return self.model_dump(exclude={"trace"}, mode="json")


class ScenarioState(BaseModel):
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    config: RunConfig
    cycle: Any = None
    plant: Any = None
    controller: Any = None
    simulation: Any = None
    training: Any = None
    report: MetricsReport | None = None
    run_id: int | None = None
    events: list[str] = Field(default_factory=list)
