"""Episode loop, policy persistence and deterministic policy evaluation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from hev_energy_lab.constants import EnvTag, ModelArch
from hev_energy_lab.cycle.drive_cycle import DriveCycle, HorizonConfig
from hev_energy_lab.ems.accounting import soc_corrected_fuel
from hev_energy_lab.ems.context import EmsContext
from hev_energy_lab.ems.controllers import Decision
from hev_energy_lab.ems.ecms import ecms_step
from hev_energy_lab.mlcore.mlp import MlpWeights
from hev_energy_lab.mlcore.persistence import load_weights, save_weights
from hev_energy_lab.powertrain.plant import PowertrainPlant
from hev_energy_lab.rlagent.env import (
    HevEnv,
    action_to_ef,
    action_to_engine_power,
    build_conventional_state,
    build_state,
)
from hev_energy_lab.rlagent.replay import Experience, ReplayBuffer
from hev_energy_lab.rlagent.td3 import AgentNetworks, Hyperparameters, act, create_agent, td3_update
from hev_energy_lab.simulation import Simulation

LOGGER = logging.getLogger(__name__)

CURVE_COLUMNS = ("episode", "return", "fuel", "final_soc")


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    total_return: float
    fuel_l: float
    final_soc: float
    terminated: bool


@dataclass
class TrainingResult:
    env_tag: EnvTag
    seed: int
    networks: AgentNetworks
    curve: list[EpisodeRecord] = field(default_factory=list)

    @property
    def policy(self) -> MlpWeights:
        return self.networks.actor

    def returns(self) -> np.ndarray:
        return np.array([record.total_return for record in self.curve])

    def curve_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(r.episode, r.total_return, r.fuel_l, r.final_soc) for r in self.curve], columns=list(CURVE_COLUMNS)
        )

    def export_curve_csv(self, path: str | Path) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        self.curve_frame().to_csv(target, index=False)
        LOGGER.info("Wrote learning curve (%d episodes) to %s", len(self.curve), target)
        return target


def make_env(
    tag: EnvTag,
    cycle: DriveCycle,
    plant: PowertrainPlant,
    tau: float = 3.0,
    ctx: EmsContext | None = None,
    horizon: HorizonConfig | None = None,
    soc_init: float | None = None,
) -> HevEnv:
    ctx = ctx or EmsContext()
    sim = Simulation(
        cycle,
        plant,
        horizon or HorizonConfig(dt=cycle.dt),
        soc_init=ctx.soc_ref if soc_init is None else soc_init,
        soc_target=ctx.soc_ref,
    )
    return HevEnv(tag=EnvTag(tag), sim=sim, tau=tau, ctx=ctx)


def train(env: HevEnv, hp: Hyperparameters, seed: int) -> TrainingResult:
    """TD3 over ``hp.episodes`` episodes; all randomness derives from ``seed``."""

    rng = np.random.default_rng(seed)
    nets = create_agent(env.state_dim, hp, seed)
    buffer = ReplayBuffer(hp.buffer_size, env.state_dim)
    result = TrainingResult(env_tag=env.tag, seed=seed, networks=nets)
    for episode in range(hp.episodes):
        sigma = hp.exploration_sigma(episode)
        state = env.reset()
        total = 0.0
        fuel = 0.0
        done = False
        terminated = False
        while not done:
            raw = float(np.clip(act(nets.actor, state)[0, 0] + rng.normal(0.0, sigma), -1.0, 1.0))
            outcome = env.step(raw)
            buffer.push(Experience(state, np.array([raw]), outcome.reward, outcome.state, outcome.done))
            if len(buffer) >= hp.batch_size:
                td3_update(nets, buffer.sample(hp.batch_size, rng), hp, rng)
            total += outcome.reward
            fuel += outcome.fuel_rate_l * env.sim.cycle.dt
            state = outcome.state
            done = outcome.done
            terminated = outcome.terminated
        record = EpisodeRecord(episode, total, fuel, env.sim.state.battery.soc, terminated)
        result.curve.append(record)
        LOGGER.info(
            "Episode %d/%d [%s]: return=%.4f fuel=%.3f L final SOC=%.4f sigma=%.4f%s",
            episode + 1,
            hp.episodes,
            env.tag.value,
            total,
            fuel,
            record.final_soc,
            sigma,
            " (terminated)" if terminated else "",
        )
    return result


def save_policy(path: str | Path, result: TrainingResult) -> Path:
    actor = result.policy
    return save_weights(
        path,
        ModelArch.MLP,
        {"sizes": list(actor.sizes), "activations": list(actor.activations), "env": result.env_tag.value},
        result.seed,
        actor.params,
    )


def load_policy(path: str | Path) -> tuple[MlpWeights, EnvTag]:
    payload = load_weights(path)
    return MlpWeights(payload.arrays(), tuple(payload.dims["activations"])), EnvTag(payload.dims["env"])


@dataclass(frozen=True)
class PolicyMetrics:
    fuel_l: float
    corrected_fuel_l: float
    final_soc: float
    start_stops: int
    fluctuation_pct: float
    terminated: bool
    total_return: float


def engine_power_fluctuation(p_ice: np.ndarray) -> float:
    """std/mean of engine power over engine-on steps, in percent."""

    on = np.asarray(p_ice, dtype=np.float64)
    on = on[on > 0.0]
    if on.size == 0 or on.mean() <= 0.0:
        return 0.0
    return float(100.0 * on.std() / on.mean())


def evaluate_policy(
    actor: MlpWeights,
    env: HevEnv,
    disturbance: float = 0.0,
    seed: int = 0,
) -> PolicyMetrics:
    """Noise-free rollout; state channels optionally scaled by ``1 + U(-level, level)``."""

    rng = np.random.default_rng(seed)
    state = env.reset()
    soc_init = env.sim.soc_init
    total = 0.0
    done = False
    terminated = False
    while not done:
        observed = state * (1.0 + rng.uniform(-disturbance, disturbance, size=state.shape)) if disturbance else state
        outcome = env.step(float(act(actor, observed)[0, 0]))
        total += outcome.reward
        state = outcome.state
        done = outcome.done
        terminated = outcome.terminated
    frame = env.sim.trace_frame()
    sim_state = env.sim.state
    corrected = soc_corrected_fuel(sim_state.fuel_l, sim_state.battery.soc, soc_init, sim_state.battery, env.ctx, env.sim.plant)
    return PolicyMetrics(
        fuel_l=sim_state.fuel_l,
        corrected_fuel_l=corrected,
        final_soc=sim_state.battery.soc,
        start_stops=sim_state.start_stop_count,
        fluctuation_pct=engine_power_fluctuation(frame["p_ice"].to_numpy()),
        terminated=terminated,
        total_return=total,
    )


@dataclass
class PolicyController:
    """Deterministic actor in the closed loop; optional multiplicative state disturbance."""

    actor: MlpWeights
    tag: EnvTag
    ctx: EmsContext = field(default_factory=EmsContext)
    disturbance: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        self.reset()

    def reset(self) -> None:
        self._rng = np.random.default_rng(self.seed)

    def decide(self, sim: Simulation) -> Decision:
        snap = sim.snapshot()
        if self.tag == EnvTag.RL_ECMS:
            state = build_state(snap, sim.cycle, sim.horizon)
        else:
            state = build_conventional_state(snap)
        if self.disturbance:
            state = state * (1.0 + self._rng.uniform(-self.disturbance, self.disturbance, size=state.shape))
        raw = float(act(self.actor, state)[0, 0])
        if self.tag == EnvTag.RL_ECMS:
            ef = action_to_ef(raw)
            choice = ecms_step(sim.state.battery, ef, snap.p_dem, self.ctx, sim.plant, sim.cycle.dt, snap.v)
            return Decision(p_ice=choice.p_ice, p_bat=choice.p_bat, ef=ef)
        p_ice = action_to_engine_power(raw, sim.plant.p_ice_max)
        if snap.p_dem <= 0.0 or snap.v <= 1e-9:
            p_ice = 0.0
        return Decision(p_ice=p_ice, p_bat=snap.p_dem - p_ice)
