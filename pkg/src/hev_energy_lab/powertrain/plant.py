"""Powertrain plant bundle and the one-step powertrain update."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Protocol

import numpy as np

from hev_energy_lab.constants import FUEL_DENSITY, IDLE_FUEL_FLOOR, SOC_TARGET, FuelAccounting
from hev_energy_lab.cycle.drive_cycle import VehicleParams
from hev_energy_lab.errors import DomainError
from hev_energy_lab.powertrain.battery import BatteryState, battery_step
from hev_energy_lab.powertrain.engine import EngineCalibration, EngineState, engine_transient_step
from hev_energy_lab.powertrain.machines import default_mg1, default_mg2
from hev_energy_lab.powertrain.maps import (
    BatteryCurve,
    BsfcMap,
    MachineMap,
    OolTable,
    bsfc_to_fuel_rate,
    build_ool_table,
    synthesize_battery_curve,
    synthesize_bsfc_map,
)

LOGGER = logging.getLogger(__name__)

BALANCE_TOLERANCE = 1e-6

# Column order of the per-step feature record.
FEATURE_NAMES: tuple[str, ...] = (
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
    "T_egr",
    "T_oil",
    "T_cool_dyn",
)
_STATE_ATTRIBUTES = {"theta": "throttle", "VT": "valve_timing"}


class WindowCorrector(Protocol):
    """Sequence model mapping a feature window to a corrected physical value."""

    window: int
    features: tuple[str, ...]

    def apply(self, rows: np.ndarray, base: float) -> tuple[float, bool]: ...


@dataclass(frozen=True, eq=False)
class PowerCorrectionTable:
    """Mean fuel correction (kg/s) per engine power, for the static fuel model."""

    powers: np.ndarray
    delta: np.ndarray

    def __call__(self, p_ice: np.ndarray) -> np.ndarray:
        return np.interp(p_ice, self.powers, self.delta)


@dataclass(frozen=True, eq=False)
class PowertrainPlant:
    vehicle: VehicleParams
    calibration: EngineCalibration
    bsfc: BsfcMap
    ool: OolTable
    battery_curve: BatteryCurve
    mg1: MachineMap
    mg2: MachineMap
    accounting: FuelAccounting = FuelAccounting.AVERAGED
    idle_floor: float = IDLE_FUEL_FLOOR
    fuel_density: float = FUEL_DENSITY
    capacity_C: float = 85.0
    fuel_corrector: WindowCorrector | None = None
    coolant_corrector: WindowCorrector | None = None
    static_correction: PowerCorrectionTable | None = None
    history_length: int = field(default=0)

    def __post_init__(self) -> None:
        windows = [c.window for c in (self.fuel_corrector, self.coolant_corrector) if c is not None]
        object.__setattr__(self, "history_length", max(windows, default=0))
        if self.accounting == FuelAccounting.CORRECTED and self.fuel_corrector is None:
            raise DomainError("corrected fuel accounting requires a fuel corrector")

    @property
    def p_ice_max(self) -> float:
        return self.bsfc.max_power

    @cached_property
    def peak_efficiency(self) -> float:
        return self.bsfc.peak_efficiency

    @property
    def p_bat_min(self) -> float:
        return -self.mg1.max_power

    @property
    def p_bat_max(self) -> float:
        return self.mg2.max_power

    def with_accounting(self, accounting: FuelAccounting) -> "PowertrainPlant":
        return replace(self, accounting=accounting)


def build_plant(
    vehicle: VehicleParams | None = None,
    calibration: EngineCalibration | None = None,
    bsfc_path: str = "",
    battery_path: str = "",
    mg1_path: str = "",
    mg2_path: str = "",
    accounting: FuelAccounting = FuelAccounting.AVERAGED,
    flat_battery: bool = False,
) -> PowertrainPlant:
    bsfc = BsfcMap.from_csv(bsfc_path) if bsfc_path else synthesize_bsfc_map()
    if flat_battery:
        curve = BatteryCurve.flat()
    elif battery_path:
        curve = BatteryCurve.from_csv(battery_path)
    else:
        curve = synthesize_battery_curve()
    mg1 = MachineMap.from_csv(mg1_path, "MG1", 115.0, 50.0e3) if mg1_path else default_mg1()
    mg2 = MachineMap.from_csv(mg2_path, "MG2", 150.0, 70.0e3) if mg2_path else default_mg2()
    return PowertrainPlant(
        vehicle=vehicle or VehicleParams(),
        calibration=calibration or EngineCalibration(),
        bsfc=bsfc,
        ool=build_ool_table(bsfc),
        battery_curve=curve,
        mg1=mg1,
        mg2=mg2,
        accounting=accounting,
    )


@dataclass(frozen=True)
class PowertrainState:
    engine: EngineState
    battery: BatteryState
    speed: float = 0.0
    fuel_l: float = 0.0
    engine_on: bool = False
    start_stop_count: int = 0
    time: float = 0.0
    history: tuple[tuple[float, ...], ...] = ()


def initial_state(plant: PowertrainPlant, soc: float = SOC_TARGET) -> PowertrainState:
    battery = BatteryState(
        soc=soc,
        curve=plant.battery_curve,
        capacity_C=plant.capacity_C,
        p_min=plant.p_bat_min,
        p_max=plant.p_bat_max,
    )
    return PowertrainState(engine=EngineState.initial(plant.calibration), battery=battery)


@dataclass(frozen=True)
class PowerSplit:
    p_ice: float
    p_bat: float
    p_brake: float
    projected: bool
    residual: float


@dataclass(frozen=True)
class StepResult:
    state: PowertrainState
    p_ice: float
    p_bat: float
    p_brake: float
    fuel_rate: float
    mdot_q: float
    mdot_d: float
    mdot_a: float
    omega: float
    torque: float
    projected: bool
    residual: float
    features: dict[str, float]
    corrected_flag: bool = False


def project_split(p_dem: float, p_ice: float, p_bat: float, battery: BatteryState, plant: PowertrainPlant) -> PowerSplit:
    """Nearest feasible split; negative surplus goes to the friction brakes."""

    lo, hi = battery.power_limits()
    bat = min(max(p_bat, lo), hi)
    ice = p_dem - bat
    brake = 0.0
    if ice > plant.p_ice_max:
        ice = plant.p_ice_max
        bat = min(max(p_dem - ice, lo), hi)
    elif ice < 1e-6:
        ice = 0.0
        if p_dem >= 0.0:
            bat = min(p_dem, hi)
        else:
            bat = min(max(bat, p_dem), 0.0)
        brake = min(p_dem - bat, 0.0)
    residual = p_dem - ice - bat - brake
    projected = abs(ice - p_ice) > 1e-3 or abs(bat - p_bat) > 1e-3
    if projected:
        LOGGER.debug("Split projected: requested (%.0f, %.0f) W -> (%.0f, %.0f) W", p_ice, p_bat, ice, bat)
    return PowerSplit(p_ice=ice, p_bat=bat, p_brake=brake, projected=projected, residual=residual)


def static_fuel_rate(p_ice: np.ndarray | float, plant: PowertrainPlant) -> np.ndarray:
    """Fuel rate on the operating line, engine-on floor included (vectorized)."""

    power = np.atleast_1d(np.asarray(p_ice, dtype=np.float64))
    on = power > 0.0
    rate = np.zeros_like(power)
    if np.any(on):
        omega = plant.ool.speeds_for(power[on])
        torque = power[on] / omega
        bsfc, _ = plant.bsfc.lookup(omega, torque)
        fuel = bsfc_to_fuel_rate(bsfc, power[on])
        if plant.static_correction is not None:
            fuel = fuel + plant.static_correction(power[on])
        rate[on] = np.maximum(fuel, plant.idle_floor)
    return rate


def feature_row(engine: EngineState, t_cool: float) -> dict[str, float]:
    row = {}
    for name in FEATURE_NAMES:
        attribute = _STATE_ATTRIBUTES.get(name, name)
        row[name] = float(getattr(engine, attribute))
    row["T_cool"] = float(t_cool)
    return row


def _window_rows(history: tuple[tuple[float, ...], ...], corrector: WindowCorrector) -> np.ndarray:
    indices = [FEATURE_NAMES.index(name) for name in corrector.features]
    rows = np.asarray(history[-corrector.window:], dtype=np.float64)
    if rows.size == 0:
        return np.empty((0, len(indices)))
    return rows[:, indices]


def powertrain_step(
    state: PowertrainState,
    p_ice: float,
    p_bat: float,
    v: float,
    p_dem: float,
    dt: float,
    plant: PowertrainPlant,
) -> StepResult:
    split = project_split(p_dem, p_ice, p_bat, state.battery, plant)
    engine_on = split.p_ice > 0.0
    omega, torque = plant.ool.operating_point(split.p_ice) if engine_on else (0.0, 0.0)
    engine_result = engine_transient_step(state.engine, omega, torque, dt, plant.calibration, plant.bsfc)
    engine = engine_result.state
    mdot_a = 0.5 * (engine_result.mdot_d + engine_result.mdot_q)

    row = feature_row(engine, engine.T_cool_dyn)
    history = state.history
    flagged = False
    if plant.history_length:
        history = (history + (tuple(row[name] for name in FEATURE_NAMES),))[-plant.history_length:]
    if plant.coolant_corrector is not None:
        t_cool, incomplete = plant.coolant_corrector.apply(_window_rows(history, plant.coolant_corrector), engine.T_cool_dyn)
        flagged = flagged or incomplete
        engine = replace(engine, T_cool=t_cool)
        row["T_cool"] = t_cool
        history = history[:-1] + (tuple(row[name] for name in FEATURE_NAMES),)

    if not engine_on:
        fuel_rate = 0.0
    elif plant.accounting == FuelAccounting.STATIC:
        fuel_rate = float(static_fuel_rate(split.p_ice, plant)[0])
    elif plant.accounting == FuelAccounting.CORRECTED:
        corrected, incomplete = plant.fuel_corrector.apply(_window_rows(history, plant.fuel_corrector), mdot_a)
        flagged = flagged or incomplete
        fuel_rate = max(corrected, plant.idle_floor)
    else:
        fuel_rate = max(mdot_a, plant.idle_floor)

    battery = battery_step(state.battery, split.p_bat, dt)
    next_state = PowertrainState(
        engine=engine,
        battery=battery,
        speed=v,
        fuel_l=state.fuel_l + fuel_rate * dt / plant.fuel_density,
        engine_on=engine_on,
        start_stop_count=state.start_stop_count + int(engine_on and not state.engine_on),
        time=state.time + dt,
        history=history,
    )
    return StepResult(
        state=next_state,
        p_ice=split.p_ice,
        p_bat=split.p_bat,
        p_brake=split.p_brake,
        fuel_rate=fuel_rate,
        mdot_q=engine_result.mdot_q,
        mdot_d=engine_result.mdot_d,
        mdot_a=mdot_a,
        omega=omega,
        torque=torque,
        projected=split.projected,
        residual=split.residual,
        features=row,
        corrected_flag=flagged,
    )
