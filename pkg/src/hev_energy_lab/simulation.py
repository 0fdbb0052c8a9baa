"""Stateful wrapper that walks a powertrain plant through a drive cycle."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from hev_energy_lab.constants import SOC_TARGET
from hev_energy_lab.cycle.drive_cycle import DriveCycle, HorizonConfig, average_demand_power, demand_profile
from hev_energy_lab.errors import ModelStateError
from hev_energy_lab.powertrain.plant import PowertrainPlant, PowertrainState, StepResult, initial_state, powertrain_step

LOGGER = logging.getLogger(__name__)

TRACE_COLUMNS = (
    "t",
    "v",
    "soc",
    "p_dem",
    "p_ice",
    "p_bat",
    "p_brake",
    "ef",
    "T_cool",
    "fuel_rate",
    "fuel_l",
    "engine_on",
    "projected",
    "residual",
    "omega",
    "torque",
)


@dataclass(frozen=True)
class Snapshot:
    index: int
    t: float
    v: float
    a: float
    p_dem: float
    p_avg: float
    p_ice: float
    soc: float
    soc_target: float
    d_rem: float
    distance_total: float
    done: bool


@dataclass
class Simulation:
    cycle: DriveCycle
    plant: PowertrainPlant
    horizon: HorizonConfig = field(default_factory=HorizonConfig)
    soc_init: float = SOC_TARGET
    soc_target: float = SOC_TARGET

    def __post_init__(self) -> None:
        self.demand = demand_profile(self.cycle, self.plant.vehicle)
        self._travelled = np.concatenate(([0.0], np.cumsum(self.cycle.speed * self.cycle.dt)))
        self.reset()

    def reset(self) -> Snapshot:
        self.state: PowertrainState = initial_state(self.plant, self.soc_init)
        self.index = 0
        self.last_p_ice = 0.0
        self.traces: list[dict[str, float]] = []
        return self.snapshot()

    @property
    def done(self) -> bool:
        return self.index >= len(self.cycle)

    @property
    def distance_total(self) -> float:
        return float(self._travelled[-1])

    def current_demand(self) -> float:
        if self.done:
            raise ModelStateError("simulation already reached the end of the cycle")
        return float(self.demand[self.index])

    def snapshot(self) -> Snapshot:
        index = min(self.index, len(self.cycle) - 1)
        history = self.demand[max(0, self.index - self.horizon.avg_steps + 1): index + 1]
        total = self.distance_total
        remaining = (total - self._travelled[self.index]) / total if total > 0.0 else 0.0
        return Snapshot(
            index=self.index,
            t=float(self.cycle.time[index]),
            v=float(self.cycle.speed[index]),
            a=float(self.cycle.acceleration[index]),
            p_dem=float(self.demand[index]),
            p_avg=average_demand_power(history, self.horizon) if history.size else 0.0,
            p_ice=self.last_p_ice,
            soc=self.state.battery.soc,
            soc_target=self.soc_target,
            d_rem=float(max(remaining, 0.0)),
            distance_total=total,
            done=self.done,
        )

    def advance(self, p_ice: float, p_bat: float, ef: float = float("nan")) -> StepResult:
        """Apply one control decision at the current sample and move to the next."""

        p_dem = self.current_demand()
        v = float(self.cycle.speed[self.index])
        result = powertrain_step(self.state, p_ice, p_bat, v, p_dem, self.cycle.dt, self.plant)
        self.traces.append(
            {
                "t": float(self.cycle.time[self.index]),
                "v": v,
                "soc": result.state.battery.soc,
                "p_dem": p_dem,
                "p_ice": result.p_ice,
                "p_bat": result.p_bat,
                "p_brake": result.p_brake,
                "ef": ef,
                "T_cool": result.state.engine.T_cool,
                "fuel_rate": result.fuel_rate,
                "fuel_l": result.state.fuel_l,
                "engine_on": float(result.state.engine_on),
                "projected": float(result.projected),
                "residual": result.residual,
                "omega": result.omega,
                "torque": result.torque,
            }
        )
        self.state = result.state
        self.last_p_ice = result.p_ice
        self.index += 1
        return result

    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.traces, columns=list(TRACE_COLUMNS))
