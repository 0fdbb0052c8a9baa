"""Synthetic "measured" traces: the physical model plus a known, seeded error recipe."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from hev_energy_lab.constants import FuelAccounting
from hev_energy_lab.cycle.drive_cycle import DriveCycle, HorizonConfig
from hev_energy_lab.ems.controllers import Controller, RuleBasedController
from hev_energy_lab.ems.rule_based import RuleParams
from hev_energy_lab.powertrain.plant import FEATURE_NAMES, PowertrainPlant
from hev_energy_lab.simulation import Simulation

LOGGER = logging.getLogger(__name__)


class TruthGeneratorSpec(BaseModel):
    """Perturbation recipe applied to the averaged physical fuel and coolant models.

    Fuel: ``m_r = m_a * b_speed(omega) * b_load(load) + lag_gain * (m_a - z)``
    with ``z`` a first-order lag of ``m_a`` (engine-on only), then multiplied
    by ``1 + N(0, noise_sigma)``. Coolant: ``T_r = T_dyn + offset +
    coolant_lag_gain * z_load + N(0, coolant_noise)``.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = 11
    speed_knots: tuple[float, ...] = (100.0, 250.0, 550.0)
    speed_bias: tuple[float, ...] = (1.08, 0.97, 1.06)
    load_knots: tuple[float, ...] = (0.0, 0.5, 1.0)
    load_bias: tuple[float, ...] = (1.10, 0.98, 1.04)
    lag_gain: float = 0.3
    lag_tau: float = Field(default=3.0, gt=0.0)
    noise_sigma: float = Field(default=0.02, ge=0.0)
    coolant_offset: float = 2.0
    coolant_lag_gain: float = 3.0
    coolant_tau: float = Field(default=20.0, gt=0.0)
    coolant_noise: float = Field(default=0.1, ge=0.0)

    @model_validator(mode="after")
    def _check_tables(self) -> "TruthGeneratorSpec":
        if len(self.speed_knots) != len(self.speed_bias) or len(self.load_knots) != len(self.load_bias):
            raise ValueError("bias tables need one factor per knot")
        return self

    @classmethod
    def identity(cls, seed: int = 11) -> "TruthGeneratorSpec":
        return cls(
            seed=seed,
            speed_bias=(1.0, 1.0, 1.0),
            load_bias=(1.0, 1.0, 1.0),
            lag_gain=0.0,
            noise_sigma=0.0,
            coolant_offset=0.0,
            coolant_lag_gain=0.0,
            coolant_noise=0.0,
        )


@dataclass(frozen=True, eq=False)
class TruthTrace:
    """One row per step: plant features, physical fuel rates and measured values."""

    cycle_name: str
    dt: float
    frame: pd.DataFrame

    def __len__(self) -> int:
        return len(self.frame)


def lag_filter(values: np.ndarray, active: np.ndarray, tau: float, dt: float) -> np.ndarray:
    """``z_t = (1 - k) z_{t-1} + k x_t`` with ``k = dt / (tau + dt)``; z holds at 0 while inactive."""

    k = dt / (tau + dt)
    lagged = np.zeros_like(values, dtype=np.float64)
    z = 0.0
    for t, (x, on) in enumerate(zip(values, active)):
        z = (1.0 - k) * z + k * x if on else 0.0
        lagged[t] = z
    return lagged


def perturb_fuel(
    mdot_a: np.ndarray, omega: np.ndarray, load: np.ndarray, engine_on: np.ndarray, dt: float, spec: TruthGeneratorSpec
) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    bias = np.interp(omega, spec.speed_knots, spec.speed_bias) * np.interp(load, spec.load_knots, spec.load_bias)
    lagged = lag_filter(mdot_a, engine_on, spec.lag_tau, dt)
    measured = mdot_a * bias + spec.lag_gain * (mdot_a - lagged)
    noise = rng.normal(0.0, 1.0, size=mdot_a.shape)
    measured = measured * (1.0 + spec.noise_sigma * noise)
    return np.where(engine_on, np.maximum(measured, 0.0), 0.0)


def perturb_coolant(
    t_cool_dyn: np.ndarray, load: np.ndarray, engine_on: np.ndarray, dt: float, spec: TruthGeneratorSpec
) -> np.ndarray:
    rng = np.random.default_rng(spec.seed + 1)
    lagged_load = lag_filter(load, np.ones_like(engine_on, dtype=bool), spec.coolant_tau, dt)
    noise = rng.normal(0.0, 1.0, size=t_cool_dyn.shape)
    return t_cool_dyn + spec.coolant_offset + spec.coolant_lag_gain * lagged_load + spec.coolant_noise * noise


def generate_truth(
    cycle: DriveCycle,
    plant: PowertrainPlant,
    spec: TruthGeneratorSpec | None = None,
    controller: Controller | None = None,
    soc_init: float = 0.34,
) -> TruthTrace:
    """Drive the physical plant through the cycle and fabricate measurements."""

    spec = spec or TruthGeneratorSpec()
    physical = plant.with_accounting(FuelAccounting.AVERAGED)
    controller = controller or RuleBasedController(RuleParams(electric_threshold=2.0e3))
    sim = Simulation(cycle, physical, HorizonConfig(dt=cycle.dt), soc_init=soc_init, soc_target=soc_init)
    controller.reset()
    rows = []
    while not sim.done:
        decision = controller.decide(sim)
        result = sim.advance(decision.p_ice, decision.p_bat, decision.ef)
        engine = result.state.engine
        row = dict(result.features)
        row.update(
            t=sim.state.time - cycle.dt,
            p_ice=result.p_ice,
            load=engine.load,
            engine_on=result.state.engine_on,
            mdot_q=result.mdot_q,
            mdot_d=result.mdot_d,
            mdot_a=result.mdot_a,
        )
        rows.append(row)
    frame = pd.DataFrame(rows)
    engine_on = frame["engine_on"].to_numpy(dtype=bool)
    frame["mdot_r"] = perturb_fuel(
        frame["mdot_a"].to_numpy(), frame["omega"].to_numpy(), frame["load"].to_numpy(), engine_on, cycle.dt, spec
    )
    frame["T_cool_r"] = perturb_coolant(frame["T_cool_dyn"].to_numpy(), frame["load"].to_numpy(), engine_on, cycle.dt, spec)
    # The measured coolant temperature is what the fuel model sees as T_cool.
    frame["T_cool"] = frame["T_cool_r"]
    LOGGER.info(
        "Generated truth on %s: %d steps, %d engine-on, mean fuel %.3f g/s",
        cycle.name,
        len(frame),
        int(engine_on.sum()),
        1e3 * float(frame.loc[engine_on, "mdot_r"].mean()) if engine_on.any() else 0.0,
    )
    leading = ["t", *FEATURE_NAMES]
    frame = frame[leading + [c for c in frame.columns if c not in leading]]
    return TruthTrace(cycle_name=cycle.name, dt=cycle.dt, frame=frame)
