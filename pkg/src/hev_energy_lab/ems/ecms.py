"""Equivalent consumption minimization: Hamiltonian, grid argmin and EF mappings."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from hev_energy_lab.constants import FUEL_LHV
from hev_energy_lab.ems.context import EmsContext
from hev_energy_lab.errors import ConstraintViolationError
from hev_energy_lab.powertrain.battery import BatteryState, soc_rate
from hev_energy_lab.powertrain.plant import PowertrainPlant, static_fuel_rate

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class EcmsDecision:
    p_bat: float
    p_ice: float
    cost: float
    ef: float
    candidates: int


def soc_derivative(p_bat: float, bat: BatteryState) -> float:
    return soc_rate(p_bat, bat)


def battery_currents(p_bat: np.ndarray, u_oc: float | np.ndarray, r_int: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized terminal current and a mask of powers with a real solution."""

    discriminant = np.square(u_oc) - 4.0 * r_int * p_bat
    feasible = discriminant >= 0.0
    current = (u_oc - np.sqrt(np.where(feasible, discriminant, 0.0))) / (2.0 * r_int)
    return current, feasible


def _evaluate(
    p_bat: np.ndarray,
    ef: float,
    p_dem: float,
    plant: PowertrainPlant,
    battery: BatteryState,
    ctx: EmsContext,
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = battery.power_limits()
    p_ice = p_dem - p_bat
    # regeneration short of the demand leaves the rest to the friction brakes
    braking = (p_ice < 0.0) & (p_bat >= p_dem - 1e-9) & (p_bat <= 0.0)
    p_ice = np.where(braking, 0.0, p_ice)
    current, feasible = battery_currents(p_bat, battery.u_oc, battery.r_int)
    feasible &= (p_bat >= lo - 1e-9) & (p_bat <= hi + 1e-9)
    feasible &= (p_ice >= -1e-9) & (p_ice <= plant.p_ice_max + 1e-9)
    soc_next = battery.soc - dt * current / (3600.0 * battery.capacity_C)
    feasible &= (soc_next >= battery.soc_min) & (soc_next <= battery.soc_max)

    if ctx.electric_power == "internal":
        electric = battery.u_oc * current
    else:
        electric = p_bat
    fuel = static_fuel_rate(np.clip(p_ice, 0.0, plant.p_ice_max), plant)
    cost = fuel + ef * electric / (FUEL_LHV * plant.peak_efficiency)
    return np.where(feasible, cost, np.inf), p_ice


def hamiltonian(
    p_bat: float | np.ndarray,
    ef: float,
    p_dem: float,
    plant: PowertrainPlant,
    battery: BatteryState,
    ctx: EmsContext | None = None,
    dt: float = 1.0,
) -> np.ndarray | float:
    """Fuel rate plus EF-weighted electrical power in kg/s; infeasible splits cost +inf.

    The electrical term is priced at the map's peak efficiency, so ``ef = 1``
    values battery energy at the best achievable fuel conversion.
    """

    ctx = ctx or EmsContext()
    values = np.atleast_1d(np.asarray(p_bat, dtype=np.float64))
    cost, _ = _evaluate(values, ef, p_dem, plant, battery, ctx, dt)
    return float(cost[0]) if np.ndim(p_bat) == 0 else cost


def candidate_controls(p_dem: float, battery: BatteryState, plant: PowertrainPlant, points: int) -> np.ndarray:
    """Battery power grid plus the engine-off and engine-saturated splits, ordered by |p_bat|."""

    lo, hi = battery.power_limits()
    grid = np.linspace(lo, hi, points)
    extras = np.array([max(p_dem, lo), p_dem - plant.p_ice_max])
    extras = extras[(extras >= lo) & (extras <= hi)]
    candidates = np.unique(np.concatenate((grid, extras, [0.0])))
    return candidates[np.argsort(np.abs(candidates), kind="stable")]


def ecms_step(
    battery: BatteryState,
    ef: float,
    p_dem: float,
    ctx: EmsContext,
    plant: PowertrainPlant,
    dt: float = 1.0,
    v: float | None = None,
) -> EcmsDecision:
    """Grid argmin of the Hamiltonian; ties go to the smaller |p_bat|."""

    engine_off = max(p_dem, battery.power_limits()[0])
    if v is not None and v <= 1e-9:
        candidates = np.array([engine_off, 0.0]) if p_dem < 0.0 else np.array([engine_off])
    else:
        candidates = candidate_controls(p_dem, battery, plant, ctx.grid_points)
    cost, p_ice = _evaluate(candidates, ef, p_dem, plant, battery, ctx, dt)
    if not np.any(np.isfinite(cost)):
        raise ConstraintViolationError(
            f"no admissible battery power for P_dem={p_dem:.0f} W at SOC={battery.soc:.4f}"
        )
    best = int(np.argmin(cost))
    return EcmsDecision(
        p_bat=float(candidates[best]),
        p_ice=float(p_ice[best]),
        cost=float(cost[best]),
        ef=ef,
        candidates=int(np.isfinite(cost).sum()),
    )


def ef_from_costate(p: float, ctx: EmsContext, bat: BatteryState, plant: PowertrainPlant) -> float:
    return -FUEL_LHV * ctx.estimated_efficiency(plant) * p / (3600.0 * bat.capacity_C * bat.u_oc)


def costate_from_ef(ef: float, ctx: EmsContext, bat: BatteryState, plant: PowertrainPlant) -> float:
    return -ef * 3600.0 * bat.capacity_C * bat.u_oc / (FUEL_LHV * ctx.estimated_efficiency(plant))
