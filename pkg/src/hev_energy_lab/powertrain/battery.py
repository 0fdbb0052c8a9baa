"""Equivalent-circuit battery: open-circuit voltage behind an internal resistance."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from hev_energy_lab.constants import SOC_MAX, SOC_MIN
from hev_energy_lab.errors import ConstraintViolationError, DomainError, InfeasiblePowerError
from hev_energy_lab.powertrain.maps import BatteryCurve


@dataclass(frozen=True)
class BatteryState:
    soc: float
    curve: BatteryCurve
    capacity_C: float = 85.0
    p_min: float = -50.0e3
    p_max: float = 70.0e3
    soc_min: float = SOC_MIN
    soc_max: float = SOC_MAX

    def __post_init__(self) -> None:
        if not 0.0 <= self.soc <= 1.0:
            raise DomainError(f"soc={self.soc} outside [0, 1]")
        if self.capacity_C <= 0.0:
            raise DomainError("capacity must be positive")
        if self.p_min >= 0.0 or self.p_max <= 0.0:
            raise DomainError("power limits must bracket zero")

    @property
    def u_oc(self) -> float:
        return self.curve.voltage(self.soc)

    @property
    def r_int(self) -> float:
        return self.curve.resistance(self.soc)

    @property
    def energy_capacity_j(self) -> float:
        return 3600.0 * self.capacity_C * self.curve.nominal_voltage

    @property
    def deliverable_power(self) -> float:
        """Largest discharge power with a real current solution."""

        return self.u_oc**2 / (4.0 * self.r_int)

    def power_limits(self) -> tuple[float, float]:
        return self.p_min, min(self.p_max, self.deliverable_power)


def battery_current(p_bat: float, u_oc: float, r_int: float) -> float:
    discriminant = u_oc**2 - 4.0 * r_int * p_bat
    if discriminant < 0.0:
        raise InfeasiblePowerError(p_bat, u_oc**2 / (4.0 * r_int))
    return (u_oc - math.sqrt(discriminant)) / (2.0 * r_int)


def soc_rate(p_bat: float, bat: BatteryState) -> float:
    """Fractional SOC rate (1/s) drawn by terminal power ``p_bat``."""

    if p_bat == 0.0:
        return 0.0
    return -battery_current(p_bat, bat.u_oc, bat.r_int) / (3600.0 * bat.capacity_C)


def battery_step(bat: BatteryState, p_bat: float, dt: float) -> BatteryState:
    if dt <= 0.0:
        raise DomainError("dt must be positive")
    if p_bat == 0.0:
        return bat
    if p_bat < bat.p_min - 1e-9 or p_bat > bat.p_max + 1e-9:
        raise ConstraintViolationError(f"battery power {p_bat:.1f} W outside [{bat.p_min:.0f}, {bat.p_max:.0f}] W")
    soc = bat.soc + dt * soc_rate(p_bat, bat)
    if soc < bat.soc_min or soc > bat.soc_max:
        raise ConstraintViolationError(f"SOC {soc:.5f} outside [{bat.soc_min}, {bat.soc_max}]")
    return replace(bat, soc=soc)
