"""Closed-loop controllers that drive a ``Simulation`` with the EMS strategies."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Protocol

from scipy.optimize import brentq

from hev_energy_lab.constants import EF_MAX, EF_MIN
from hev_energy_lab.cycle.drive_cycle import DriveCycle, HorizonConfig
from hev_energy_lab.ems.aecms import PiGains, aecms_update
from hev_energy_lab.ems.context import EmsContext
from hev_energy_lab.ems.dp import DpSolution
from hev_energy_lab.ems.ecms import ecms_step
from hev_energy_lab.ems.rule_based import RuleParams, rule_based_step
from hev_energy_lab.errors import SimulationError
from hev_energy_lab.powertrain.plant import PowertrainPlant
from hev_energy_lab.simulation import Simulation

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class Decision:
    p_ice: float
    p_bat: float
    ef: float = float("nan")


class Controller(Protocol):
    def reset(self) -> None: ...

    def decide(self, sim: Simulation) -> Decision: ...


def _split_from_battery(p_dem: float, p_bat: float) -> float:
    return max(p_dem - p_bat, 0.0)


@dataclass
class ConstantEfController:
    ef: float
    ctx: EmsContext = field(default_factory=EmsContext)

    def reset(self) -> None:
        return None

    def decide(self, sim: Simulation) -> Decision:
        snap = sim.snapshot()
        choice = ecms_step(sim.state.battery, self.ef, snap.p_dem, self.ctx, sim.plant, sim.cycle.dt, snap.v)
        return Decision(p_ice=choice.p_ice, p_bat=choice.p_bat, ef=self.ef)


@dataclass
class AecmsController:
    gains: PiGains
    ctx: EmsContext = field(default_factory=EmsContext)

    def __post_init__(self) -> None:
        self._initial = replace(self.gains)

    def reset(self) -> None:
        self.gains = replace(self._initial)

    def decide(self, sim: Simulation) -> Decision:
        snap = sim.snapshot()
        ef = aecms_update(self.gains, snap.soc, self.ctx.soc_ref, sim.cycle.dt)
        choice = ecms_step(sim.state.battery, ef, snap.p_dem, self.ctx, sim.plant, sim.cycle.dt, snap.v)
        return Decision(p_ice=choice.p_ice, p_bat=choice.p_bat, ef=ef)


@dataclass
class RuleBasedController:
    params: RuleParams = field(default_factory=RuleParams)

    def reset(self) -> None:
        return None

    def decide(self, sim: Simulation) -> Decision:
        snap = sim.snapshot()
        p_ice, p_bat = rule_based_step(sim.state.battery, snap.p_dem, sim.plant, self.params, snap.v)
        return Decision(p_ice=p_ice, p_bat=p_bat)


@dataclass
class DpController:
    solution: DpSolution

    def reset(self) -> None:
        return None

    def decide(self, sim: Simulation) -> Decision:
        snap = sim.snapshot()
        p_bat = self.solution.decide(snap.index, snap.soc)
        return Decision(p_ice=_split_from_battery(snap.p_dem, p_bat), p_bat=p_bat)


def run_controller(sim: Simulation, controller: Controller) -> Simulation:
    """Drive the simulation to the end of its cycle; plant errors carry the step index."""

    sim.reset()
    controller.reset()
    while not sim.done:
        try:
            decision = controller.decide(sim)
            sim.advance(decision.p_ice, decision.p_bat, decision.ef)
        except (ValueError, RuntimeError) as exc:
            if isinstance(exc, SimulationError):
                raise
            raise SimulationError(str(exc), sim.index) from exc
    return sim


def terminal_soc_for(
    ef: float,
    cycle: DriveCycle,
    plant: PowertrainPlant,
    ctx: EmsContext,
    soc_init: float,
    horizon: HorizonConfig | None = None,
) -> float:
    sim = Simulation(cycle, plant, horizon or HorizonConfig(dt=cycle.dt), soc_init=soc_init, soc_target=ctx.soc_ref)
    run_controller(sim, ConstantEfController(ef, ctx))
    return sim.state.battery.soc


def tune_constant_ef(
    cycle: DriveCycle,
    plant: PowertrainPlant,
    ctx: EmsContext,
    soc_init: float,
    xtol: float = 1e-4,
) -> float:
    """Shooting on the constant EF so the run ends at the reference SOC."""

    def gap(ef: float) -> float:
        return terminal_soc_for(ef, cycle, plant, ctx, soc_init) - ctx.soc_ref

    low, high = gap(EF_MIN), gap(EF_MAX)
    if low * high > 0.0:
        best = EF_MIN if abs(low) < abs(high) else EF_MAX
        LOGGER.warning("Terminal SOC not bracketed on [%.2f, %.2f]; using %.2f", EF_MIN, EF_MAX, best)
        return best
    ef = float(brentq(gap, EF_MIN, EF_MAX, xtol=xtol))
    LOGGER.info("Constant EF for %s tuned to %.4f", cycle.name, ef)
    return ef
