"""Strategy registry: how each strategy tag turns into a closed-loop controller."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, replace

from hev_energy_lab.calibrate.correction import CorrectionModel
from hev_energy_lab.constants import CorrectionTarget, EnvTag, FuelAccounting, StrategyTag
from hev_energy_lab.cycle.drive_cycle import load_cycle
from hev_energy_lab.ems.aecms import PiGains
from hev_energy_lab.ems.controllers import (
    AecmsController,
    ConstantEfController,
    Controller,
    DpController,
    RuleBasedController,
    tune_constant_ef,
)
from hev_energy_lab.ems.dp import dp_solve
from hev_energy_lab.ems.rule_based import RuleParams
from hev_energy_lab.errors import ConfigError
from hev_energy_lab.harness.state import RunConfig, ScenarioState
from hev_energy_lab.powertrain.plant import PowertrainPlant, build_plant
from hev_energy_lab.rlagent.trainer import PolicyController, load_policy, make_env, train

LOGGER = logging.getLogger(__name__)

ENV_FOR_STRATEGY = {StrategyTag.RL_ECMS: EnvTag.RL_ECMS, StrategyTag.RL: EnvTag.CONVENTIONAL}


@dataclass(frozen=True)
class StrategyDefinition:
    tag: StrategyTag
    ready: Callable[[RunConfig], bool]
    builder: Callable[[ScenarioState], Controller]


def _load_corrector(path: str, target: CorrectionTarget) -> CorrectionModel:
    model = CorrectionModel.load(path)
    if model.target != target:
        raise ConfigError(f"{path} holds a {model.target.value} model, expected {target.value}")
    return model


def plant_for_config(config: RunConfig) -> PowertrainPlant:
    plant = build_plant(
        vehicle=config.vehicle(),
        bsfc_path=config.bsfc_map,
        battery_path=config.battery_curve,
        mg1_path=config.mg1_map,
        mg2_path=config.mg2_map,
        accounting=FuelAccounting.AVERAGED,
    )
    fuel = _load_corrector(config.fuel_correction_path, CorrectionTarget.FUEL) if config.fuel_correction_path else None
    coolant = (
        _load_corrector(config.coolant_correction_path, CorrectionTarget.COOLANT)
        if config.coolant_correction_path
        else None
    )
    if fuel is not None and config.fuel_model != FuelAccounting.CORRECTED:
        LOGGER.warning("Fuel correction model loaded but fuel_model=%s; it will not be used", config.fuel_model.value)
    return replace(plant, accounting=config.fuel_model, fuel_corrector=fuel, coolant_corrector=coolant)


def _build_rule_based(state: ScenarioState) -> Controller:
    return RuleBasedController(RuleParams(soc_target=state.config.soc_target))


def _build_aecms(state: ScenarioState) -> Controller:
    cfg = state.config
    return AecmsController(PiGains(kp=cfg.kp, ki=cfg.ki, ef_init=cfg.ef_init), cfg.ems_context())


def _build_constant_ef(state: ScenarioState) -> Controller:
    cfg = state.config
    ctx = cfg.ems_context()
    ef = cfg.ef if cfg.ef is not None else tune_constant_ef(state.cycle, state.plant, ctx, cfg.soc_init)
    return ConstantEfController(ef, ctx)


def _build_dp(state: ScenarioState) -> Controller:
    cfg = state.config
    solution = dp_solve(state.cycle, state.plant, cfg.ems_context(), cfg.dp_grid(), cfg.soc_init)
    state.training = solution
    return DpController(solution)


def _build_policy(state: ScenarioState) -> Controller:
    cfg = state.config
    env_tag = ENV_FOR_STRATEGY[cfg.strategy]
    ctx = cfg.ems_context()
    if cfg.policy_path:
        actor, stored_tag = load_policy(cfg.policy_path)
        if stored_tag != env_tag:
            raise ConfigError(f"{cfg.policy_path} holds a {stored_tag.value} policy, strategy is {cfg.strategy.value}")
        LOGGER.info("Loaded %s policy from %s", env_tag.value, cfg.policy_path)
    else:
        env = make_env(env_tag, state.cycle, state.plant, cfg.tau, ctx, cfg.horizon(), cfg.soc_init)
        result = train(env, cfg.hyperparameters(), cfg.seed)
        state.training = result
        actor = result.policy
    return PolicyController(actor, env_tag, ctx, disturbance=cfg.disturbance, seed=cfg.seed)


STRATEGY_REGISTRY: dict[StrategyTag, StrategyDefinition] = {
    StrategyTag.RB: StrategyDefinition(StrategyTag.RB, ready=lambda cfg: True, builder=_build_rule_based),
    StrategyTag.A_ECMS: StrategyDefinition(StrategyTag.A_ECMS, ready=lambda cfg: True, builder=_build_aecms),
    StrategyTag.CONST_EF: StrategyDefinition(
        StrategyTag.CONST_EF, ready=lambda cfg: cfg.ef is not None, builder=_build_constant_ef
    ),
    StrategyTag.DP: StrategyDefinition(StrategyTag.DP, ready=lambda cfg: False, builder=_build_dp),
    StrategyTag.RL_ECMS: StrategyDefinition(StrategyTag.RL_ECMS, ready=lambda cfg: False, builder=_build_policy),
    StrategyTag.RL: StrategyDefinition(StrategyTag.RL, ready=lambda cfg: False, builder=_build_policy),
}


def get_strategy(tag: StrategyTag | str) -> StrategyDefinition:
    try:
        return STRATEGY_REGISTRY[StrategyTag(tag)]
    except ValueError as exc:
        raise ConfigError(f"unknown strategy {tag!r}; expected one of {[t.value for t in StrategyTag]}") from exc


def prepare_scenario(config: RunConfig) -> ScenarioState:
    """Cycle, plant and a ready controller, without running the workflow."""

    state = ScenarioState(config=config)
    state.cycle = load_cycle(config.cycle, config.dt)
    state.plant = plant_for_config(config)
    state.controller = get_strategy(config.strategy).builder(state)
    return state
