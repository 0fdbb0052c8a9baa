from hev_energy_lab.cycle.drive_cycle import (
    DriveCycle,
    HorizonConfig,
    VehicleParams,
    average_demand_power,
    cycle_from_speeds,
    demand_power,
    demand_profile,
    future_speed_window,
    load_cycle,
)

__all__ = [
    "DriveCycle",
    "HorizonConfig",
    "VehicleParams",
    "average_demand_power",
    "cycle_from_speeds",
    "demand_power",
    "demand_profile",
    "future_speed_window",
    "load_cycle",
]
