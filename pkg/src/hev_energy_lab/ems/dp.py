"""Deterministic dynamic programming benchmark over a (time, SOC) grid."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from hev_energy_lab.constants import SOC_MAX, SOC_MIN
from hev_energy_lab.cycle.drive_cycle import DriveCycle, demand_profile
from hev_energy_lab.ems.context import EmsContext
from hev_energy_lab.ems.ecms import battery_currents
from hev_energy_lab.errors import DomainError, InfeasibleDpError
from hev_energy_lab.powertrain.plant import PowertrainPlant, static_fuel_rate

LOGGER = logging.getLogger(__name__)

UNREACHABLE = 1.0e9

# stage(k, states) -> (controls, next_states, costs), each shaped (len(states), n_controls)
StageFn = Callable[[int, np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]


class DpGrid(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    soc_points: int = Field(default=201, ge=50)
    soc_min: float = SOC_MIN
    soc_max: float = SOC_MAX
    p_bat_points: int = Field(default=101, ge=3)
    terminal_penalty: float = 1.0e3


def backward_induction(
    stage: StageFn, grid: np.ndarray, n_steps: int, terminal: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Cost-to-go table ``(n_steps + 1, len(grid))`` and the minimizing control per node."""

    value = np.empty((n_steps + 1, grid.size))
    policy = np.empty((n_steps, grid.size))
    value[n_steps] = terminal
    for k in range(n_steps - 1, -1, -1):
        controls, next_states, costs = stage(k, grid)
        future = np.interp(next_states, grid, value[k + 1])
        total = np.where(np.isfinite(costs), costs + future, np.inf)
        best = np.argmin(total, axis=1)
        rows = np.arange(grid.size)
        value[k] = np.minimum(total[rows, best], UNREACHABLE)
        policy[k] = controls[rows, best]
    return value, policy


def forward_rollout(
    stage: StageFn, grid: np.ndarray, value: np.ndarray, x0: float
) -> tuple[np.ndarray, np.ndarray, float]:
    """Re-optimize each step against the interpolated cost-to-go from the actual state."""

    n_steps = value.shape[0] - 1
    states = np.empty(n_steps + 1)
    controls = np.empty(n_steps)
    states[0] = x0
    total = 0.0
    for k in range(n_steps):
        options, next_states, costs = stage(k, np.array([states[k]]))
        future = np.interp(next_states[0], grid, value[k + 1])
        candidate = np.where(np.isfinite(costs[0]), costs[0] + future, np.inf)
        best = int(np.argmin(candidate))
        if not np.isfinite(candidate[best]):
            raise InfeasibleDpError("power_or_soc_limits")
        controls[k] = options[0, best]
        states[k + 1] = next_states[0, best]
        total += costs[0, best]
    return states, controls, total


class DpProblem:
    """Energy-management stage model: SOC state, battery power control, fuel stage cost."""

    def __init__(self, cycle: DriveCycle, plant: PowertrainPlant, ctx: EmsContext, grid: DpGrid) -> None:
        self.cycle = cycle
        self.plant = plant
        self.ctx = ctx
        self.grid_spec = grid
        self.dt = cycle.dt
        self.demand = demand_profile(cycle, plant.vehicle)
        self.p_min = plant.p_bat_min
        self.p_max = plant.p_bat_max
        self.u_grid = np.linspace(self.p_min, self.p_max, grid.p_bat_points)
        upper = min(ctx.soc_ref + ctx.epsilon, grid.soc_max)
        self.soc_grid = np.unique(
            np.concatenate((np.linspace(grid.soc_min, grid.soc_max, grid.soc_points), [ctx.soc_ref, upper]))
        )
        self.capacity_C = plant.capacity_C
        self._controls: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    def _step_controls(self, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        cached = self._controls.get(k)
        if cached is not None:
            return cached
        p_dem = float(self.demand[k])
        engine_off = max(p_dem, self.p_min)
        if self.cycle.speed[k] <= 1e-9:
            controls = np.array([engine_off, 0.0]) if p_dem < 0.0 else np.array([engine_off])
        else:
            extras = np.array([engine_off, p_dem - self.plant.p_ice_max, 0.0])
            extras = extras[(extras >= self.p_min) & (extras <= self.p_max)]
            controls = np.unique(np.concatenate((self.u_grid, extras)))
            controls = controls[np.argsort(np.abs(controls), kind="stable")]
        p_ice = p_dem - controls
        braking = (p_ice < 0.0) & (controls >= p_dem - 1e-9) & (controls <= 0.0)
        p_ice = np.where(braking, 0.0, p_ice)
        admissible = (p_ice >= -1e-9) & (p_ice <= self.plant.p_ice_max + 1e-9)
        fuel = static_fuel_rate(np.clip(p_ice, 0.0, self.plant.p_ice_max), self.plant) * self.dt
        self._controls[k] = (controls, fuel, admissible)
        return controls, fuel, admissible

    def stage(self, k: int, soc: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        controls, fuel, admissible = self._step_controls(k)
        curve = self.plant.battery_curve
        u_oc = curve.voltages(soc)[:, np.newaxis]
        r_int = curve.resistances(soc)[:, np.newaxis]
        u = controls[np.newaxis, :]
        current, feasible = battery_currents(u, u_oc, r_int)
        feasible &= u <= np.minimum(self.p_max, u_oc**2 / (4.0 * r_int)) + 1e-9
        feasible &= admissible[np.newaxis, :]
        next_soc = soc[:, np.newaxis] - self.dt * current / (3600.0 * self.capacity_C)
        feasible &= (next_soc >= self.grid_spec.soc_min - 1e-12) & (next_soc <= self.grid_spec.soc_max + 1e-12)
        costs = np.where(feasible, np.broadcast_to(fuel, feasible.shape), np.inf)
        return np.broadcast_to(u, feasible.shape), next_soc, costs

    def terminal_cost(self, enforce_window: bool = True) -> np.ndarray:
        if not enforce_window:
            return np.zeros_like(self.soc_grid)
        upper = self.ctx.soc_ref + self.ctx.epsilon
        inside = (self.soc_grid >= self.ctx.soc_ref - 1e-12) & (self.soc_grid <= upper + 1e-12)
        return np.where(inside, 0.0, self.grid_spec.terminal_penalty)


@dataclass(frozen=True, eq=False)
class DpSolution:
    problem: DpProblem
    soc_grid: np.ndarray
    cost_to_go: np.ndarray
    policy: np.ndarray
    soc_trajectory: np.ndarray
    p_bat_trajectory: np.ndarray
    fuel_kg: float

    @property
    def fuel_l(self) -> float:
        return self.fuel_kg / self.problem.plant.fuel_density

    def decide(self, k: int, soc: float) -> float:
        """Optimal battery power at step ``k`` from an arbitrary SOC."""

        options, next_states, costs = self.problem.stage(k, np.array([soc]))
        future = np.interp(next_states[0], self.soc_grid, self.cost_to_go[k + 1])
        candidate = np.where(np.isfinite(costs[0]), costs[0] + future, np.inf)
        best = int(np.argmin(candidate))
        if not np.isfinite(candidate[best]):
            raise InfeasibleDpError("power_or_soc_limits")
        return float(options[0, best])

    def to_frame(self) -> pd.DataFrame:
        n_steps, n_soc = self.policy.shape
        return pd.DataFrame(
            {
                "t": np.repeat(np.arange(n_steps) * self.problem.dt, n_soc),
                "soc_index": np.tile(np.arange(n_soc), n_steps),
                "soc": np.tile(self.soc_grid, n_steps),
                "p_bat_opt": self.policy.ravel(),
            }
        )

    def export_policy_csv(self, path: str | Path) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(target, index=False)
        LOGGER.info("Wrote DP policy table to %s", target)
        return target


def dp_solve(
    cycle: DriveCycle,
    plant: PowertrainPlant,
    ctx: EmsContext | None = None,
    grid: DpGrid | None = None,
    soc_init: float | None = None,
) -> DpSolution:
    ctx = ctx or EmsContext()
    grid = grid or DpGrid()
    soc_init = ctx.soc_ref if soc_init is None else soc_init
    if not grid.soc_min <= soc_init <= grid.soc_max:
        raise DomainError(f"initial SOC {soc_init} outside the DP grid")
    problem = DpProblem(cycle, plant, ctx, grid)
    n_steps = len(cycle)
    value, policy = backward_induction(problem.stage, problem.soc_grid, n_steps, problem.terminal_cost())

    start = float(np.interp(soc_init, problem.soc_grid, value[0]))
    if start >= 0.5 * grid.terminal_penalty:
        relaxed, _ = backward_induction(problem.stage, problem.soc_grid, n_steps, problem.terminal_cost(False))
        reachable = float(np.interp(soc_init, problem.soc_grid, relaxed[0])) < 0.5 * UNREACHABLE
        binding = "terminal_soc_window" if reachable else "power_or_soc_limits"
        LOGGER.warning("DP on %s infeasible (%s)", cycle.name, binding)
        raise InfeasibleDpError(binding)

    states, controls, fuel_kg = forward_rollout(problem.stage, problem.soc_grid, value, soc_init)
    LOGGER.info(
        "DP solved %s: %d steps x %d SOC nodes, fuel %.4f kg, final SOC %.4f",
        cycle.name,
        n_steps,
        problem.soc_grid.size,
        fuel_kg,
        states[-1],
    )
    return DpSolution(
        problem=problem,
        soc_grid=problem.soc_grid,
        cost_to_go=value,
        policy=policy,
        soc_trajectory=states,
        p_bat_trajectory=controls,
        fuel_kg=float(fuel_kg),
    )
