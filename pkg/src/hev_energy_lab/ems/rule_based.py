"""Thermostat plus load-following baseline controller."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict

from hev_energy_lab.constants import SOC_TARGET
from hev_energy_lab.powertrain.battery import BatteryState
from hev_energy_lab.powertrain.plant import PowertrainPlant


class RuleParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    soc_target: float = SOC_TARGET
    charge_band: float = 0.02
    electric_threshold: float = 10.0e3
    charge_power: float = 10.0e3


def rule_based_step(
    battery: BatteryState,
    p_dem: float,
    plant: PowertrainPlant,
    params: RuleParams | None = None,
    v: float | None = None,
) -> tuple[float, float]:
    """Return ``(P_ICE, p_bat)`` for one step."""

    params = params or RuleParams()
    lo, hi = battery.power_limits()
    if p_dem <= 0.0 or (v is not None and v <= 1e-9):
        if battery.soc >= battery.soc_max - 1e-3:
            return 0.0, 0.0
        return 0.0, max(p_dem, lo)

    if battery.soc < params.soc_target - params.charge_band:
        p_ice = min(p_dem + params.charge_power, plant.p_ice_max)
        p_ice = max(p_ice, p_dem - hi)
        return p_ice, p_dem - p_ice

    if battery.soc > params.soc_target and p_dem < params.electric_threshold and p_dem <= hi:
        return 0.0, p_dem
    p_ice = min(p_dem, plant.p_ice_max)
    return p_ice, p_dem - p_ice
