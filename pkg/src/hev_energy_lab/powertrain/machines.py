"""Electric machine electrical power from efficiency maps."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from hev_energy_lab.constants import Direction
from hev_energy_lab.powertrain.maps import MachineMap, synthesize_machine_map

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class MachinePower:
    electrical: float
    torque: float
    efficiency: float
    saturated: bool


def machine_power(omega: float, torque: float, machine: MachineMap, direction: Direction) -> MachinePower:
    limit = machine.torque_limit(omega)
    saturated = abs(torque) > limit
    applied = max(-limit, min(limit, torque))
    if saturated:
        LOGGER.warning("%s torque %.1f N·m saturated at %.1f N·m", machine.name, torque, applied)
    mechanical = omega * applied
    if mechanical == 0.0:
        return MachinePower(electrical=0.0, torque=applied, efficiency=1.0, saturated=saturated)
    efficiency = machine.efficiency_at(omega, applied)
    if direction == Direction.MOTORING:
        electrical = mechanical / efficiency
    else:
        electrical = mechanical * efficiency
    return MachinePower(electrical=electrical, torque=applied, efficiency=efficiency, saturated=saturated)


def default_mg1() -> MachineMap:
    return synthesize_machine_map("MG1", max_torque=115.0, max_power=50.0e3, max_speed_rpm=9000.0)


def default_mg2() -> MachineMap:
    return synthesize_machine_map("MG2", max_torque=150.0, max_power=70.0e3, max_speed_rpm=6000.0)
