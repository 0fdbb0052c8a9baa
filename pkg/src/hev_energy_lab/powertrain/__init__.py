from hev_energy_lab.powertrain.battery import BatteryState, battery_current, battery_step, soc_rate
from hev_energy_lab.powertrain.engine import (
    EngineCalibration,
    EngineState,
    coolant_step,
    dynamic_fuel_rate,
    engine_transient_step,
    manifold_dynamics,
    quasi_static_fuel,
    throttle_airflow,
)
from hev_energy_lab.powertrain.machines import machine_power
from hev_energy_lab.powertrain.maps import (
    BatteryCurve,
    BsfcMap,
    MachineMap,
    OolTable,
    build_ool_table,
    ool_operating_point,
)
from hev_energy_lab.powertrain.plant import (
    FEATURE_NAMES,
    PowerCorrectionTable,
    PowertrainPlant,
    PowertrainState,
    StepResult,
    build_plant,
    initial_state,
    powertrain_step,
    project_split,
    static_fuel_rate,
)


__all__ = [
    "FEATURE_NAMES",
    "BatteryCurve",
    "BatteryState",
    "BsfcMap",
    "EngineCalibration",
    "EngineState",
    "MachineMap",
    "OolTable",
    "PowerCorrectionTable",
    "PowertrainPlant",
    "PowertrainState",
    "StepResult",
    "battery_current",
    "battery_step",
    "build_ool_table",
    "build_plant",
    "coolant_step",
    "dynamic_fuel_rate",
    "engine_transient_step",
    "initial_state",
    "machine_power",
    "manifold_dynamics",
    "ool_operating_point",
    "powertrain_step",
    "project_split",
    "quasi_static_fuel",
    "soc_rate",
    "static_fuel_rate",
    "throttle_airflow",
]
