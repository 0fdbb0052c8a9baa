"""Multi-run studies: strategy comparison, reward-weight sweep, disturbance robustness, A-ECMS tuning."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.stats import spearmanr

from hev_energy_lab.constants import EnvTag, StrategyTag
from hev_energy_lab.cycle.drive_cycle import load_cycle
from hev_energy_lab.ems.aecms import PiGains
from hev_energy_lab.ems.controllers import AecmsController, run_controller
from hev_energy_lab.errors import ConfigError, SimulationError, TrainingDivergedError
from hev_energy_lab.harness.graph import GraphDependencies, run_scenario
from hev_energy_lab.harness.registry import plant_for_config
from hev_energy_lab.harness.report import build_report, fuel_savings_pct
from hev_energy_lab.harness.state import DISTURBANCE_LEVELS, MetricsReport, RunConfig
from hev_energy_lab.mlcore.mlp import MlpWeights
from hev_energy_lab.rlagent.trainer import evaluate_policy, make_env, train
from hev_energy_lab.simulation import Simulation

LOGGER = logging.getLogger(__name__)

COMPARISON_COLUMNS = (
    "strategy",
    "final_soc_pct",
    "fuel_l",
    "fuel_economy",
    "corrected_fuel_economy",
    "start_stop_count",
    "fuel_savings_pct",
)


@dataclass
class ComparisonResult:
    table: pd.DataFrame
    reports: dict[StrategyTag, MetricsReport] = field(default_factory=dict)


def compare_strategies(
    config: RunConfig,
    strategies: list[StrategyTag] | tuple[StrategyTag, ...],
    deps: GraphDependencies | None = None,
) -> ComparisonResult:
    """One report per strategy; savings are relative to the rule-based run."""

    tags = [StrategyTag(tag) for tag in strategies]
    if not tags:
        raise ConfigError("compare needs at least one strategy")
    reports: dict[StrategyTag, MetricsReport] = {}
    for tag in dict.fromkeys([*tags, StrategyTag.RB]):
        reports[tag] = run_scenario(config.model_copy(update={"strategy": tag}), deps=deps)
    reference = reports[StrategyTag.RB]
    rows = []
    for tag in tags:
        report = reports[tag]
        report.fuel_savings_pct = fuel_savings_pct(report, reference)
        rows.append(
            {
                "strategy": tag.value,
                "final_soc_pct": report.final_soc_pct,
                "fuel_l": report.fuel_l,
                "fuel_economy": report.fuel_economy,
                "corrected_fuel_economy": report.corrected_fuel_economy,
                "start_stop_count": report.start_stop_count,
                "fuel_savings_pct": report.fuel_savings_pct,
            }
        )
        LOGGER.info(
            "%s: corrected %.3f L/100 km, savings %.2f%%",
            tag.value,
            report.corrected_fuel_economy,
            report.fuel_savings_pct,
        )
    return ComparisonResult(
        table=pd.DataFrame(rows, columns=list(COMPARISON_COLUMNS)),
        reports={tag: reports[tag] for tag in tags},
    )


def tau_sweep(
    config: RunConfig,
    taus: list[float] | tuple[float, ...],
    deps: GraphDependencies | None = None,
) -> pd.DataFrame:
    """Fresh training per reward weight; failed cells keep their error message."""

    if config.strategy not in (StrategyTag.RL_ECMS, StrategyTag.RL):
        raise ConfigError(f"tau sweep needs a learning strategy, got {config.strategy.value}")
    rows = []
    for tau in sorted(taus):
        row: dict[str, object] = {"tau": tau}
        try:
            report = run_scenario(config.model_copy(update={"tau": tau, "policy_path": ""}), deps=deps)
        except (TrainingDivergedError, SimulationError) as exc:
            LOGGER.warning("tau=%.2f aborted: %s", tau, exc)
            row.update(final_soc_pct=np.nan, fuel_l=np.nan, corrected_fuel_l=np.nan, status=str(exc))
        else:
            row.update(
                final_soc_pct=report.final_soc_pct,
                fuel_l=report.fuel_l,
                corrected_fuel_l=report.corrected_fuel_l,
                status="ok",
            )
        rows.append(row)
    return pd.DataFrame(rows, columns=["tau", "final_soc_pct", "fuel_l", "corrected_fuel_l", "status"])


def soc_trend(sweep: pd.DataFrame) -> float:
    """Spearman rank correlation of final SOC against tau over completed cells."""

    done = sweep[sweep["status"] == "ok"]
    if len(done) < 2:
        return float("nan")
    rho, _ = spearmanr(done["tau"], done["final_soc_pct"])
    return float(rho)


def train_study_policies(config: RunConfig) -> dict[EnvTag, MlpWeights]:
    cycle = load_cycle(config.cycle, config.dt)
    plant = plant_for_config(config)
    policies = {}
    for tag in (EnvTag.RL_ECMS, EnvTag.CONVENTIONAL):
        env = make_env(tag, cycle, plant, config.tau, config.ems_context(), config.horizon(), config.soc_init)
        policies[tag] = train(env, config.hyperparameters(), config.seed).policy
    return policies


def disturbance_study(
    config: RunConfig,
    levels: list[float] | tuple[float, ...] = DISTURBANCE_LEVELS,
    policies: dict[EnvTag, MlpWeights] | None = None,
    seeds: int = 5,
) -> pd.DataFrame:
    """Per policy and level: engine power fluctuation, final SOC, fuel and fuel change versus level 0."""

    policies = policies or train_study_policies(config)
    cycle = load_cycle(config.cycle, config.dt)
    plant = plant_for_config(config)
    rows = []
    for tag, actor in policies.items():
        env = make_env(tag, cycle, plant, config.tau, config.ems_context(), config.horizon(), config.soc_init)
        baseline_fuel = evaluate_policy(actor, env, 0.0, config.seed).fuel_l
        for level in sorted(levels):
            runs = [evaluate_policy(actor, env, level, config.seed + k) for k in range(seeds)]
            fuel = float(np.mean([run.fuel_l for run in runs]))
            change = 100.0 * (fuel - baseline_fuel) / baseline_fuel if baseline_fuel else 0.0
            rows.append(
                {
                    "policy": tag.value,
                    "level": level,
                    "fluctuation_pct": float(np.mean([run.fluctuation_pct for run in runs])),
                    "final_soc_pct": 100.0 * float(np.mean([run.final_soc for run in runs])),
                    "fuel_l": fuel,
                    "fuel_change_pct": change,
                    "terminated": any(run.terminated for run in runs),
                }
            )
    return pd.DataFrame(
        rows, columns=["policy", "level", "fluctuation_pct", "final_soc_pct", "fuel_l", "fuel_change_pct", "terminated"]
    )


def tune_aecms(
    config: RunConfig,
    ef_grid: tuple[float, ...] = (1.0, 1.25, 1.5),
    kp_grid: tuple[float, ...] = (2.0, 5.0, 10.0, 15.0),
    ki_grid: tuple[float, ...] = (0.05, 0.1, 0.25, 0.5),
) -> tuple[PiGains, pd.DataFrame]:
    """Grid search over (EF0, kp, ki) minimizing SOC-corrected fuel."""

    cycle = load_cycle(config.cycle, config.dt)
    plant = plant_for_config(config)
    ctx = config.ems_context()
    rows = []
    for ef0, kp, ki in itertools.product(ef_grid, kp_grid, ki_grid):
        sim = Simulation(cycle, plant, config.horizon(), soc_init=config.soc_init, soc_target=config.soc_target)
        try:
            run_controller(sim, AecmsController(PiGains(kp=kp, ki=ki, ef_init=ef0), ctx))
        except SimulationError as exc:
            LOGGER.debug("A-ECMS (%.2f, %.1f, %.2f) failed: %s", ef0, kp, ki, exc)
            rows.append({"ef_init": ef0, "kp": kp, "ki": ki, "corrected_fuel_l": np.inf, "final_soc": np.nan})
            continue
        report = build_report(sim, StrategyTag.A_ECMS, ctx, config.seed)
        rows.append(
            {
                "ef_init": ef0,
                "kp": kp,
                "ki": ki,
                "corrected_fuel_l": report.corrected_fuel_l,
                "final_soc": sim.state.battery.soc,
            }
        )
    frame = pd.DataFrame(rows).sort_values("corrected_fuel_l", kind="stable").reset_index(drop=True)
    best = frame.iloc[0]
    if not np.isfinite(best["corrected_fuel_l"]):
        raise SimulationError("no A-ECMS gain setting completed the cycle", 0)
    gains = PiGains(kp=float(best["kp"]), ki=float(best["ki"]), ef_init=float(best["ef_init"]))
    LOGGER.info("A-ECMS tuned on %s: ef0=%.2f kp=%.1f ki=%.2f", cycle.name, gains.ef_init, gains.kp, gains.ki)
    return gains, frame
