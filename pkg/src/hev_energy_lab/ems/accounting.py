from __future__ import annotations

from hev_energy_lab.constants import FUEL_DENSITY, FUEL_LHV
from hev_energy_lab.ems.context import EmsContext
from hev_energy_lab.powertrain.battery import BatteryState
from hev_energy_lab.powertrain.plant import PowertrainPlant


def soc_correction_slope(bat: BatteryState, eta: float, density: float = FUEL_DENSITY) -> float:
    """Liters of fuel per unit of SOC deficit."""

    return bat.energy_capacity_j / (eta * FUEL_LHV * density)


def soc_corrected_fuel(
    fuel_l: float,
    soc_final: float,
    soc_target: float,
    bat: BatteryState,
    ctx: EmsContext,
    plant: PowertrainPlant,
) -> float:
    """Charge the net battery energy change to the fuel bill; a deficit adds fuel."""

    slope = soc_correction_slope(bat, ctx.estimated_efficiency(plant), plant.fuel_density)
    return fuel_l + (soc_target - soc_final) * slope
