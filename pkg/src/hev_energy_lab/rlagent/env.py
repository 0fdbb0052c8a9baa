"""MDP wrappers over the simulation: EF-setting RL-ECMS and direct engine-power RL."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from hev_energy_lab.constants import EF_MAX, EF_MIN, ENGINE_MAX_POWER, TERMINAL_REWARD, EnvTag
from hev_energy_lab.cycle.drive_cycle import DriveCycle, HorizonConfig, future_speed_window
from hev_energy_lab.ems.context import EmsContext
from hev_energy_lab.ems.ecms import ecms_step
from hev_energy_lab.errors import ConstraintViolationError, InfeasiblePowerError
from hev_energy_lab.simulation import Simulation, Snapshot

LOGGER = logging.getLogger(__name__)

POWER_SCALE = 120.0e3
SPEED_SCALE = 40.0
ACCEL_SCALE = 3.0
DSOC_SCALE = 0.2
V_FX_POINTS = 5
RLECMS_STATE_DIM = 5 + V_FX_POINTS
CONVENTIONAL_STATE_DIM = 3


def build_state(snap: Snapshot, cycle: DriveCycle, cfg: HorizonConfig) -> np.ndarray:
    """Normalized ``[P_avg, V_FX(5), P_ICE, v, d_rem, dSOC]``."""

    window = future_speed_window(cycle, snap.t, cfg)
    v_fx = np.interp(np.linspace(0.0, window.size - 1, V_FX_POINTS), np.arange(window.size), window)
    state = np.concatenate(
        (
            [snap.p_avg / POWER_SCALE],
            v_fx / SPEED_SCALE,
            [snap.p_ice / POWER_SCALE, snap.v / SPEED_SCALE, snap.d_rem, (snap.soc - snap.soc_target) / DSOC_SCALE],
        )
    )
    return np.clip(state, -1.0, 1.0)


def build_conventional_state(snap: Snapshot) -> np.ndarray:
    state = np.array([snap.v / SPEED_SCALE, snap.a / ACCEL_SCALE, (snap.soc - snap.soc_target) / DSOC_SCALE])
    return np.clip(state, -1.0, 1.0)


def action_to_ef(raw: float) -> float:
    return float(np.clip(1.25 + 0.75 * raw, EF_MIN, EF_MAX))


def action_to_engine_power(raw: float, p_ice_max: float = ENGINE_MAX_POWER) -> float:
    return float(p_ice_max * np.clip(raw, 0.0, 1.0))


def reward(mdot_fuel: float, dsoc: float, tau: float) -> float:
    """``-(fuel + tau * zeta)``; only a SOC deficit is penalized."""

    zeta = dsoc**2 if dsoc < 0.0 else 0.0
    return -(mdot_fuel + tau * zeta)


@dataclass(frozen=True)
class StepOutcome:
    state: np.ndarray
    reward: float
    done: bool
    fuel_rate_l: float
    p_ice: float
    terminated: bool = False


def _advance(sim: Simulation, p_ice: float, p_bat: float, ef: float, tau: float) -> tuple[float, float, float, bool]:
    try:
        result = sim.advance(p_ice, p_bat, ef)
    except (ConstraintViolationError, InfeasiblePowerError) as exc:
        LOGGER.debug("Episode terminated at step %d: %s", sim.index, exc)
        return TERMINAL_REWARD, 0.0, 0.0, True
    fuel_l = result.fuel_rate / sim.plant.fuel_density
    dsoc = result.state.battery.soc - sim.soc_target
    return reward(fuel_l, dsoc, tau), fuel_l, result.p_ice, False


def env_step_rlecms(
    sim: Simulation, ef: float, ctx: EmsContext, tau: float, horizon: HorizonConfig
) -> StepOutcome:
    snap = sim.snapshot()
    try:
        choice = ecms_step(sim.state.battery, ef, snap.p_dem, ctx, sim.plant, sim.cycle.dt, snap.v)
    except ConstraintViolationError as exc:
        LOGGER.debug("No admissible split at step %d: %s", sim.index, exc)
        return StepOutcome(build_state(snap, sim.cycle, horizon), TERMINAL_REWARD, True, 0.0, 0.0, terminated=True)
    r, fuel_l, p_ice, terminated = _advance(sim, choice.p_ice, choice.p_bat, ef, tau)
    done = terminated or sim.done
    return StepOutcome(build_state(sim.snapshot(), sim.cycle, horizon), r, done, fuel_l, p_ice, terminated)


def env_step_conventional(sim: Simulation, p_ice_cmd: float, tau: float) -> StepOutcome:
    snap = sim.snapshot()
    p_ice = float(np.clip(p_ice_cmd, 0.0, sim.plant.p_ice_max))
    if snap.p_dem <= 0.0 or snap.v <= 1e-9:
        p_ice = 0.0
    p_bat = snap.p_dem - p_ice
    r, fuel_l, applied, terminated = _advance(sim, p_ice, p_bat, float("nan"), tau)
    done = terminated or sim.done
    return StepOutcome(build_conventional_state(sim.snapshot()), r, done, fuel_l, applied, terminated)


@dataclass
class HevEnv:
    """Episode-level environment; ``step`` takes the raw actor output in [-1, 1]."""

    tag: EnvTag
    sim: Simulation
    tau: float = 3.0
    ctx: EmsContext = field(default_factory=EmsContext)

    @property
    def state_dim(self) -> int:
        return RLECMS_STATE_DIM if self.tag == EnvTag.RL_ECMS else CONVENTIONAL_STATE_DIM

    def observe(self) -> np.ndarray:
        snap = self.sim.snapshot()
        if self.tag == EnvTag.RL_ECMS:
            return build_state(snap, self.sim.cycle, self.sim.horizon)
        return build_conventional_state(snap)

    def reset(self) -> np.ndarray:
        self.sim.reset()
        return self.observe()

    def step(self, raw: float) -> StepOutcome:
        if self.tag == EnvTag.RL_ECMS:
            return env_step_rlecms(self.sim, action_to_ef(raw), self.ctx, self.tau, self.sim.horizon)
        return env_step_conventional(self.sim, action_to_engine_power(raw, self.sim.plant.p_ice_max), self.tau)
