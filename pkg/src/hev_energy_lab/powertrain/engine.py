"""Quasi-static and mean-value transient engine model with coolant thermal state."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from hev_energy_lab.constants import FUEL_LHV
from hev_energy_lab.errors import DomainError
from hev_energy_lab.powertrain.maps import BsfcMap, bsfc_to_fuel_rate

LOGGER = logging.getLogger(__name__)

COOLANT_MIN = 250.0
COOLANT_GUARD = 390.0


class EngineCalibration(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    c1: float = Field(default=2.5e8, gt=0.0)
    c2: float = Field(default=1.0, gt=0.0)
    c3: float = Field(default=3.0e4, gt=0.0)
    s1: float = 0.55
    s2: float = 6.0e-4
    s3: float = -6.0e-10
    s4: float = 2.0e-6
    C_DV: float = Field(default=1.0e-3, gt=0.0)
    gamma_gas: float = Field(default=1.4, gt=1.0)
    R_m: float = Field(default=287.0, gt=0.0)
    T0: float = Field(default=293.0, gt=0.0)
    p0: float = Field(default=101325.0, gt=0.0)
    L_th: float = Field(default=14.7, gt=0.0)
    LHV: float = Field(default=FUEL_LHV, gt=0.0)
    mu: float = Field(default=0.3, gt=0.0)
    xi: float = Field(default=1.5, gt=0.0)
    theta0: float = Field(default=0.05, gt=0.0)
    V_int: float = Field(default=2.5e-3, gt=0.0)
    epsilon_p: float = Field(default=1.15, gt=0.0, le=3.0)
    k_egr: float = Field(default=1.0e-6, gt=0.0)
    T_cool_target: float = Field(default=363.0, gt=0.0)
    T_cool_ref: float = Field(default=293.0, gt=0.0)
    T_cool_init: float = Field(default=363.0, gt=0.0)
    m_ICE: float = Field(default=120.0, gt=0.0)
    C_ICE: float = Field(default=500.0, gt=0.0)
    exhaust_heat_fraction: float = Field(default=0.3, gt=0.0, lt=1.0)
    h_rad_closed: float = Field(default=40.0, gt=0.0)
    h_rad_open: float = Field(default=1500.0, gt=0.0)
    thermostat_band: float = Field(default=5.0, gt=0.0)
    p_int_min_ratio: float = Field(default=0.2, gt=0.0)
    p_int_max_ratio: float = Field(default=0.98, gt=0.0, le=1.0)

    @property
    def critical_pressure_ratio(self) -> float:
        g = self.gamma_gas
        return (2.0 / (g + 1.0)) ** (g / (g - 1.0))

    @property
    def thermal_mass(self) -> float:
        return self.m_ICE * self.C_ICE


@dataclass(frozen=True)
class EngineState:
    omega: float = 0.0
    torque_cmd: float = 0.0
    throttle: float = 0.0
    spark_adv: float = 0.0
    fuel_timing: float = 0.0
    egr_valve: float = 0.0
    lambda_afr: float = 1.0
    T_int: float = 293.0
    T_exh: float = 293.0
    p_int: float = 0.98 * 101325.0
    p_exh: float = 1.15 * 0.98 * 101325.0
    mdot_at: float = 0.0
    mdot_egr: float = 0.0
    mdot_ac: float = 0.0
    eta_vol: float = 0.0
    T_cool: float = 363.0
    T_cool_dyn: float = 363.0
    valve_timing: float = 0.0
    T_egr: float = 293.0
    T_oil: float = 363.0
    p_oil: float = 1.0e5
    mdot_fuel_d: float = 0.0
    load: float = 0.0

    def __post_init__(self) -> None:
        if min(self.mdot_at, self.mdot_egr, self.mdot_ac) < 0.0:
            raise DomainError("mass flows must be non-negative")
        if not 0.0 <= self.egr_valve <= 1.0:
            raise DomainError("egr_valve must lie in [0, 1]")

    @classmethod
    def initial(cls, cal: EngineCalibration) -> "EngineState":
        p_int = cal.p_int_max_ratio * cal.p0
        return cls(
            throttle=cal.theta0,
            T_int=cal.T0,
            T_exh=cal.T0,
            p_int=p_int,
            p_exh=cal.epsilon_p * p_int,
            T_cool=cal.T_cool_init,
            T_cool_dyn=cal.T_cool_init,
            T_egr=cal.T0,
            T_oil=cal.T_cool_init,
        )


@dataclass(frozen=True)
class ManifoldResult:
    p_int: float
    p_exh: float
    eta_vol: float
    mdot_egr: float
    mdot_ac: float
    lambda_afr: float | None


@dataclass(frozen=True)
class EngineStepResult:
    state: EngineState
    mdot_q: float
    mdot_d: float
    clamped: bool


def quasi_static_fuel(omega: float, torque: float, bsfc_map: BsfcMap) -> tuple[float, bool]:
    """Fuel rate in kg/s from the BSFC map; the flag reports an envelope clamp."""

    if torque <= 0.0 or omega <= 0.0:
        return 0.0, False
    values, clamped = bsfc_map.lookup(omega, torque)
    if clamped[0]:
        LOGGER.warning("BSFC lookup clamped at omega=%.1f rad/s torque=%.1f N·m", omega, torque)
    return float(bsfc_to_fuel_rate(values[0], omega * torque)), bool(clamped[0])


def throttle_area(theta: float, cal: EngineCalibration) -> float:
    return 1.0 - math.cos(theta - cal.theta0)


def _throttle_flow_per_area(p_int: float, cal: EngineCalibration) -> float:
    g = cal.gamma_gas
    p_eff = max(p_int, cal.critical_pressure_ratio * cal.p0)
    bracket = 1.0 - (p_eff / cal.p0) ** ((g - 1.0) / g)
    return cal.C_DV * math.sqrt(g) / math.sqrt(cal.R_m * cal.T0) * p_eff * math.sqrt(2.0 * g / (g - 1.0) * max(bracket, 0.0))


def throttle_airflow(theta: float, p_int: float, cal: EngineCalibration) -> float:
    if p_int < 0.0 or p_int > cal.p0:
        raise DomainError(f"p_int={p_int:.1f} Pa outside [0, p0]")
    return throttle_area(theta, cal) * _throttle_flow_per_area(p_int, cal)


def invert_throttle(mdot_required: float, p_int: float, cal: EngineCalibration) -> float:
    """Throttle angle delivering ``mdot_required`` at the given manifold pressure."""

    capacity = _throttle_flow_per_area(min(p_int, cal.p0), cal)
    if mdot_required <= 0.0 or capacity <= 0.0:
        return cal.theta0
    area = min(mdot_required / capacity, 1.0)
    return cal.theta0 + math.acos(1.0 - area)


def egr_flow(egr_valve: float, p_exh: float, p_int: float, cal: EngineCalibration) -> float:
    return cal.k_egr * egr_valve * max(p_exh - p_int, 0.0)


def manifold_pressure(mdot_at: float, omega: float, cal: EngineCalibration) -> float:
    raw = (cal.c1 * mdot_at + cal.c3 * omega) / (cal.c2 * omega)
    return float(np.clip(raw, cal.p_int_min_ratio * cal.p0, cal.p_int_max_ratio * cal.p0))


def volumetric_efficiency(omega: float, p_int: float, cal: EngineCalibration) -> float:
    return cal.s1 + cal.s2 * omega + cal.s3 * omega**3 + cal.s4 * p_int


def manifold_dynamics(state: EngineState, cal: EngineCalibration, dt: float = 1.0) -> ManifoldResult:
    """Intake/exhaust manifold update; ``state.p_int`` is the previous pressure."""

    if state.omega <= 0.0:
        p_int = cal.p_int_max_ratio * cal.p0
        return ManifoldResult(
            p_int=p_int,
            p_exh=cal.epsilon_p * p_int,
            eta_vol=volumetric_efficiency(0.0, p_int, cal),
            mdot_egr=0.0,
            mdot_ac=0.0,
            lambda_afr=None,
        )

    p_int = manifold_pressure(state.mdot_at, state.omega, cal)
    p_exh = cal.epsilon_p * p_int
    eta_vol = volumetric_efficiency(state.omega, p_int, cal)
    mdot_egr = egr_flow(state.egr_valve, p_exh, p_int, cal)
    storage = cal.V_int / (cal.R_m * state.T_int) * (p_int - state.p_int) / dt
    mdot_ac = max(state.mdot_at + mdot_egr - storage, 0.0)
    # fresh charge (EGR excluded) over stoichiometric fuel; 1.0 is stoichiometric
    denominator = cal.L_th * state.mdot_fuel_d
    lambda_afr = (mdot_ac - mdot_egr) / denominator if denominator > 0.0 else None
    return ManifoldResult(
        p_int=p_int,
        p_exh=p_exh,
        eta_vol=eta_vol,
        mdot_egr=mdot_egr,
        mdot_ac=mdot_ac,
        lambda_afr=lambda_afr,
    )


def enrichment_factor(T_cool_dyn: float, cal: EngineCalibration) -> float:
    if T_cool_dyn >= cal.T_cool_target:
        return 1.0
    ratio = (cal.T_cool_target - T_cool_dyn) / (cal.T_cool_target - cal.T_cool_ref)
    return 1.0 + cal.mu * ratio**cal.xi


def dynamic_fuel_rate(state: EngineState, cal: EngineCalibration) -> float:
    if state.lambda_afr <= 0.0:
        raise DomainError("air-fuel ratio must be positive")
    return state.mdot_at / (state.lambda_afr * cal.L_th) * enrichment_factor(state.T_cool_dyn, cal)


def radiator_conductance(T_cool: float, cal: EngineCalibration) -> float:
    opening = np.clip((T_cool - (cal.T_cool_target - cal.thermostat_band)) / (2.0 * cal.thermostat_band), 0.0, 1.0)
    return float(cal.h_rad_closed + opening * (cal.h_rad_open - cal.h_rad_closed))


def heat_flows(state: EngineState, mdot_fuel: float, cal: EngineCalibration) -> tuple[float, float, float]:
    q_exh = cal.exhaust_heat_fraction * mdot_fuel * cal.LHV
    q_rad = radiator_conductance(state.T_cool_dyn, cal) * (state.T_cool_dyn - cal.T0)
    return q_exh, q_rad, 0.0


def coolant_step(
    state: EngineState,
    p_ice: float,
    heat: tuple[float, float, float],
    dt: float,
    cal: EngineCalibration,
    mdot_fuel: float | None = None,
) -> float:
    if dt <= 0.0:
        raise DomainError("dt must be positive")
    fuel = state.mdot_fuel_d if mdot_fuel is None else mdot_fuel
    net = (fuel * cal.LHV - p_ice) - sum(heat)
    updated = state.T_cool_dyn + dt * net / cal.thermal_mass
    return float(np.clip(updated, COOLANT_MIN, COOLANT_GUARD))


def _lag(value: float, target: float, tau: float, dt: float) -> float:
    return value + (target - value) * min(dt / tau, 1.0)


def _schedules(omega: float, load: float, max_speed: float) -> dict[str, float]:
    speed_ratio = omega / max_speed
    return {
        "spark_adv": 10.0 + 15.0 * speed_ratio - 8.0 * load,
        "fuel_timing": 5.0 + 10.0 * load,
        "valve_timing": 20.0 * speed_ratio + 10.0 * load,
        "egr_valve": 0.3 * max(0.0, 1.0 - ((load - 0.4) / 0.4) ** 2),
        "lambda_cmd": 0.9 if load > 0.9 else 1.0,
    }


def engine_transient_step(
    state: EngineState,
    omega: float,
    torque: float,
    dt: float,
    cal: EngineCalibration,
    bsfc_map: BsfcMap,
) -> EngineStepResult:
    """Advance the mean-value engine one step at the commanded (ω, T)."""

    engine_on = omega > 0.0 and torque > 0.0
    if not engine_on:
        manifold = manifold_dynamics(replace(state, omega=0.0), cal, dt)
        heat = heat_flows(state, 0.0, cal)
        cooled = replace(state, mdot_fuel_d=0.0)
        t_cool = coolant_step(cooled, 0.0, heat, dt, cal, mdot_fuel=0.0)
        off = replace(
            state,
            omega=0.0,
            torque_cmd=0.0,
            throttle=cal.theta0,
            egr_valve=0.0,
            lambda_afr=1.0,
            p_int=manifold.p_int,
            p_exh=manifold.p_exh,
            mdot_at=0.0,
            mdot_egr=0.0,
            mdot_ac=0.0,
            eta_vol=manifold.eta_vol,
            T_cool=t_cool,
            T_cool_dyn=t_cool,
            T_exh=_lag(state.T_exh, t_cool, 60.0, dt),
            T_int=_lag(state.T_int, cal.T0, 60.0, dt),
            T_egr=_lag(state.T_egr, t_cool, 30.0, dt),
            T_oil=_lag(state.T_oil, t_cool, 120.0, dt),
            p_oil=1.0e5,
            mdot_fuel_d=0.0,
            load=0.0,
        )
        return EngineStepResult(state=off, mdot_q=0.0, mdot_d=0.0, clamped=False)

    load = float(min(torque / bsfc_map.torque_limit(omega), 1.0))
    schedule = _schedules(omega, load, bsfc_map.max_speed)
    mdot_q, clamped = quasi_static_fuel(omega, torque, bsfc_map)
    air_required = mdot_q * schedule["lambda_cmd"] * cal.L_th
    theta = invert_throttle(air_required, state.p_int, cal)
    mdot_at = throttle_airflow(theta, min(state.p_int, cal.p0), cal)

    commanded = replace(
        state,
        omega=omega,
        torque_cmd=torque,
        throttle=theta,
        spark_adv=schedule["spark_adv"],
        fuel_timing=schedule["fuel_timing"],
        valve_timing=schedule["valve_timing"],
        egr_valve=schedule["egr_valve"],
        lambda_afr=schedule["lambda_cmd"],
        mdot_at=mdot_at,
        load=load,
    )
    mdot_d = dynamic_fuel_rate(commanded, cal)
    commanded = replace(commanded, mdot_fuel_d=mdot_d)
    manifold = manifold_dynamics(commanded, cal, dt)

    p_ice = omega * torque
    heat = heat_flows(commanded, mdot_d, cal)
    t_cool = coolant_step(commanded, p_ice, heat, dt, cal, mdot_fuel=mdot_d)
    next_state = replace(
        commanded,
        p_int=manifold.p_int,
        p_exh=manifold.p_exh,
        eta_vol=manifold.eta_vol,
        mdot_egr=manifold.mdot_egr,
        mdot_ac=manifold.mdot_ac,
        lambda_afr=max(manifold.lambda_afr, 0.0) if manifold.lambda_afr is not None else schedule["lambda_cmd"],
        T_cool=t_cool,
        T_cool_dyn=t_cool,
        T_exh=cal.T0 + 400.0 + 350.0 * load,
        T_int=_lag(state.T_int, cal.T0 + 0.2 * (t_cool - cal.T0), 60.0, dt),
        T_egr=_lag(state.T_egr, t_cool + 150.0 * load, 20.0, dt),
        T_oil=_lag(state.T_oil, t_cool + 10.0 * load, 120.0, dt),
        p_oil=1.0e5 + 800.0 * omega * (1.0 + (cal.T_cool_target - state.T_oil) / 200.0),
    )
    return EngineStepResult(state=next_state, mdot_q=mdot_q, mdot_d=mdot_d, clamped=clamped)
