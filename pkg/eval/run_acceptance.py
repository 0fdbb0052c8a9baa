"""Acceptance harness: property checks over the strategies, models and learners."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.stats import spearmanr

PROJECT_ROOT = Path(__file__).resolve().parents[1]
SRC_PATH = PROJECT_ROOT / "src"
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

from hev_energy_lab.calibrate.correction import TrainingSettings
from hev_energy_lab.calibrate.features import pearson
from hev_energy_lab.config import AppConfig
from hev_energy_lab.constants import IDLE_FUEL_FLOOR, SOC_MAX, SOC_MIN, EnvTag, ModelArch, StrategyTag
from hev_energy_lab.cycle.drive_cycle import load_cycle
from hev_energy_lab.ems.controllers import ConstantEfController, run_controller, tune_constant_ef
from hev_energy_lab.ems.dp import DpGrid, dp_solve
from hev_energy_lab.ems.ecms import ecms_step
from hev_energy_lab.harness.calibration import calibration_pipeline
from hev_energy_lab.harness.graph import run_scenario
from hev_energy_lab.harness.registry import plant_for_config, prepare_scenario
from hev_energy_lab.harness.state import RunConfig
from hev_energy_lab.harness.studies import disturbance_study, tau_sweep, train_study_policies
from hev_energy_lab.logging_config import configure_logging
from hev_energy_lab.mlcore.backprop import SQUARED_ERROR, backprop
from hev_energy_lab.mlcore.gradcheck import finite_difference_check
from hev_energy_lab.mlcore.lstm import LstmWeights, init_lstm, lstm_sequence_forward
from hev_energy_lab.mlcore.mlp import MlpWeights, mlp_forward
from hev_energy_lab.powertrain.battery import battery_step
from hev_energy_lab.powertrain.plant import build_plant, initial_state
from hev_energy_lab.rlagent.td3 import Hyperparameters, create_agent
from hev_energy_lab.rlagent.trainer import make_env, train
from hev_energy_lab.simulation import Simulation

LOGGER = logging.getLogger(__name__)

CheckOutcome = tuple[list[str], dict[str, Any]]


@dataclass(frozen=True)
class AcceptanceCriterion:
    id: str
    title: str
    check: str
    params: dict[str, Any]
    budget_s: float


@dataclass
class CriterionResult:
    criterion_id: str
    title: str
    passed: bool
    elapsed_s: float = 0.0
    failures: list[str] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)


def _default_criteria_path() -> Path:
    return PROJECT_ROOT / "eval" / "criteria.json"


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Run acceptance criteria.")
    parser.add_argument(
        "--criteria-file",
        default=str(_default_criteria_path()),
        help="Path to acceptance criteria JSON file.",
    )
    parser.add_argument(
        "--env-file",
        default=".env",
        help="Path to environment file.",
    )
    parser.add_argument(
        "--criterion",
        help="Run a single criterion by id.",
    )
    parser.add_argument(
        "--quiet",
        action="store_true",
        help="Print only the pass/fail summary.",
    )
    return parser.parse_args()


def _load_criteria(path: Path) -> list[AcceptanceCriterion]:
    with path.open("r", encoding="utf-8") as file:
        payload = json.load(file)
    if not isinstance(payload, list):
        raise ValueError(f"Criteria file must contain a JSON list: {path}")
    criteria = []
    for item in payload:
        if not isinstance(item, dict) or not item.get("id") or not item.get("check"):
            raise ValueError("Each criterion requires non-empty 'id' and 'check'.")
        criteria.append(
            AcceptanceCriterion(
                id=str(item["id"]),
                title=str(item.get("title", item["id"])),
                check=str(item["check"]),
                params=dict(item.get("params", {})),
                budget_s=float(item.get("budget_s", 0.0)),
            )
        )
    if not criteria:
        raise ValueError("No criteria found in criteria file.")
    return criteria


def _filter_criteria(criteria: list[AcceptanceCriterion], criterion_id: str | None) -> list[AcceptanceCriterion]:
    if not criterion_id:
        return criteria
    for criterion in criteria:
        if criterion.id == criterion_id:
            return [criterion]
    raise KeyError(f"Criterion id not found: {criterion_id}")


def _base_config(config: AppConfig, params: dict[str, Any], **updates: Any) -> RunConfig:
    return RunConfig.from_app_config(config, cycle=params.get("cycle", "urban300"), **updates)


def check_hamiltonian_argmin(config: AppConfig, params: dict[str, Any]) -> CheckOutcome:
    rng = np.random.default_rng(config.seed)
    cfg = RunConfig.from_app_config(config)
    plant = plant_for_config(cfg)
    ctx = cfg.ems_context()
    dense = ctx.model_copy(update={"grid_points": int(params["dense_points"])})
    worst = 0.0
    failures = []
    for _ in range(int(params["samples"])):
        battery = initial_state(plant, float(rng.uniform(0.25, 0.75))).battery
        p_dem = float(rng.uniform(-30.0e3, 60.0e3))
        ef = float(rng.uniform(0.5, 2.0))
        coarse_cost = ecms_step(battery, ef, p_dem, ctx, plant, v=10.0).cost
        dense_cost = ecms_step(battery, ef, p_dem, dense, plant, v=10.0).cost
        gap = (coarse_cost - dense_cost) / max(abs(dense_cost), IDLE_FUEL_FLOOR)
        worst = max(worst, gap)
    if worst > params["tolerance"]:
        failures.append(f"coarse argmin {100 * worst:.3f}% above dense optimum")
    return failures, {"worst_gap_pct": 100.0 * worst}


def check_dp_dominance(config: AppConfig, params: dict[str, Any]) -> CheckOutcome:
    base = _base_config(config, params)
    dp = run_scenario(base.model_copy(update={"strategy": StrategyTag.DP}))
    details: dict[str, Any] = {"dp": dp.corrected_fuel_l}
    failures = []
    for tag in params["strategies"]:
        report = run_scenario(base.model_copy(update={"strategy": StrategyTag(tag)}))
        details[tag] = report.corrected_fuel_l
        if dp.corrected_fuel_l > report.corrected_fuel_l * (1.0 + params["slack"]):
            failures.append(f"dp {dp.corrected_fuel_l:.4f} L above {tag} {report.corrected_fuel_l:.4f} L")
    return failures, details


def check_pmp_equivalence(config: AppConfig, params: dict[str, Any]) -> CheckOutcome:
    cfg = _base_config(config, params)
    cycle = load_cycle(cfg.cycle, cfg.dt)
    plant = build_plant(vehicle=cfg.vehicle(), flat_battery=True).with_accounting(cfg.fuel_model)
    ctx = cfg.ems_context()
    dp = dp_solve(cycle, plant, ctx, cfg.dp_grid(), cfg.soc_init)
    ef = tune_constant_ef(cycle, plant, ctx, cfg.soc_init)
    sim = Simulation(cycle, plant, cfg.horizon(), soc_init=cfg.soc_init, soc_target=cfg.soc_target)
    run_controller(sim, ConstantEfController(ef, ctx))
    gap = abs(sim.state.fuel_l - dp.fuel_l) / dp.fuel_l
    failures = [] if gap <= params["tolerance"] else [f"ECMS fuel {100 * gap:.2f}% away from DP"]
    return failures, {"ef": ef, "ecms_fuel_l": sim.state.fuel_l, "dp_fuel_l": dp.fuel_l, "gap_pct": 100.0 * gap}


def _mlp_check(weights: MlpWeights, inputs: np.ndarray, targets: np.ndarray, eps: float):
    _, cache = mlp_forward(inputs, weights)
    grads, _ = backprop(SQUARED_ERROR, cache, weights, target=targets)

    def loss(params: dict[str, np.ndarray]) -> float:
        out, _ = mlp_forward(inputs, MlpWeights(params, weights.activations))
        return float(np.mean((out - targets) ** 2))

    return finite_difference_check(loss, weights.params, grads, eps=eps)


def check_gradient_fidelity(config: AppConfig, params: dict[str, Any]) -> CheckOutcome:
    rng = np.random.default_rng(config.seed)
    eps = float(params["eps"])
    lstm = init_lstm(4, 6, rng)
    xs = rng.normal(size=(5, 8, 4))
    ys = rng.normal(size=(5, 1))
    _, cache = lstm_sequence_forward(xs, lstm)
    grads, _ = backprop(SQUARED_ERROR, cache, lstm, target=ys)

    def lstm_loss(probe: dict[str, np.ndarray]) -> float:
        out, _ = lstm_sequence_forward(xs, LstmWeights(probe, lstm.input_dim, lstm.hidden_dim))
        return float(np.mean((out - ys) ** 2))

    reports = {"lstm": finite_difference_check(lstm_loss, lstm.params, grads, eps=eps)}
    nets = create_agent(6, Hyperparameters(hidden_sizes=(16, 16)), config.seed)
    inputs = rng.normal(size=(8, 7))
    targets = rng.normal(size=(8, 1))
    reports["critic1"] = _mlp_check(nets.critic1, inputs, targets, eps)
    reports["critic2"] = _mlp_check(nets.critic2, inputs, targets, eps)
    failures = [
        f"{name}: max relative error {report.max_rel_error:.2e} at {report.worst}"
        for name, report in reports.items()
        if not report.passed(params["tolerance"])
    ]
    return failures, {name: report.max_rel_error for name, report in reports.items()}


def check_correction_recovery(config: AppConfig, params: dict[str, Any]) -> CheckOutcome:
    cfg = RunConfig.from_app_config(config, cycle="nedc")
    result = calibration_pipeline(cfg, settings=TrainingSettings(seed=cfg.seed), archs=(ModelArch.LSTM,))
    table = result.comparison.set_index("model")
    corrected = float(table.loc["lstm-corrected", "mae"])
    averaged = float(table.loc["averaged", "mae"])
    failures = []
    if not corrected <= params["ratio"] * averaged:
        failures.append(f"corrected MAE {corrected:.4f} g/s vs averaged {averaged:.4f} g/s")
    return failures, {"corrected_mae": corrected, "averaged_mae": averaged, "ratio": corrected / averaged}


def check_pearson_oracle(config: AppConfig, params: dict[str, Any]) -> CheckOutcome:
    rng = np.random.default_rng(config.seed)
    worst = 0.0
    worst_affine = 0.0
    for _ in range(int(params["vectors"])):
        n = int(rng.integers(3, 200))
        x = rng.normal(size=n)
        y = 0.5 * x + rng.normal(size=n)
        cov = np.cov(x, y, ddof=0)
        oracle = cov[0, 1] / np.sqrt(cov[0, 0] * cov[1, 1])
        rho = pearson(x, y)
        worst = max(worst, abs(rho - oracle))
        scale = float(rng.uniform(-5.0, 5.0)) or 1.0
        worst_affine = max(worst_affine, abs(pearson(scale * x + 3.0, y) - np.sign(scale) * rho))
    failures = []
    if worst > params["tolerance"]:
        failures.append(f"oracle gap {worst:.2e}")
    if worst_affine > params["tolerance"]:
        failures.append(f"affine gap {worst_affine:.2e}")
    return failures, {"oracle_gap": worst, "affine_gap": worst_affine}


def check_learning_signal(config: AppConfig, params: dict[str, Any]) -> CheckOutcome:
    cfg = _base_config(config, params, episodes=int(params["episodes"]))
    cycle = load_cycle(cfg.cycle, cfg.dt)
    plant = plant_for_config(cfg)
    runs = []
    for _ in range(2):
        env = make_env(EnvTag.RL_ECMS, cycle, plant, cfg.tau, cfg.ems_context(), cfg.horizon(), cfg.soc_init)
        runs.append(train(env, cfg.hyperparameters(), cfg.seed).returns)
    returns = runs[0]
    first, last = float(np.mean(returns[:10])), float(np.mean(returns[-10:]))
    failures = []
    if not last > first:
        failures.append(f"last-10 mean return {last:.4f} not above first-10 {first:.4f}")
    if not np.array_equal(runs[0], runs[1]):
        failures.append("two runs with the same seed produced different returns")
    return failures, {"first10": first, "last10": last}


def check_tau_trend(config: AppConfig, params: dict[str, Any]) -> CheckOutcome:
    cfg = _base_config(config, params, strategy=StrategyTag.RL_ECMS)
    sweep = tau_sweep(cfg, params["taus"])
    done = sweep[sweep["status"] == "ok"]
    failures = []
    if len(done) < len(params["taus"]):
        failures.append(f"{len(params['taus']) - len(done)} sweep cells aborted")
    rho = float(spearmanr(done["tau"], done["final_soc_pct"])[0]) if len(done) >= 2 else float("nan")
    if not rho == 1.0:
        failures.append(f"final SOC rank correlation with tau is {rho:.3f}")
    return failures, {"final_soc_pct": done["final_soc_pct"].tolist(), "spearman": rho}


def check_disturbance_robustness(config: AppConfig, params: dict[str, Any]) -> CheckOutcome:
    cfg = _base_config(config, params)
    study = disturbance_study(cfg, params["levels"], policies=train_study_policies(cfg), seeds=int(params["seeds"]))
    failures = []
    details = {}
    for level in params["levels"]:
        rows = study[study["level"] == level].set_index("policy")
        ecms = float(rows.loc[EnvTag.RL_ECMS.value, "fluctuation_pct"])
        conventional = float(rows.loc[EnvTag.CONVENTIONAL.value, "fluctuation_pct"])
        details[str(level)] = {"rl-ecms": ecms, "rl": conventional}
        if not ecms < conventional:
            failures.append(f"level {level}: rl-ecms fluctuation {ecms:.2f}% not below rl {conventional:.2f}%")
    return failures, details


def check_soc_invariants(config: AppConfig, params: dict[str, Any]) -> CheckOutcome:
    cfg = _base_config(config, params, ef=1.25)
    cycle = load_cycle(cfg.cycle, cfg.dt)
    plant = plant_for_config(cfg)
    failures = []
    details = {}
    for tag in params["strategies"]:
        state = prepare_scenario(cfg.model_copy(update={"strategy": StrategyTag(tag)}))
        sim = Simulation(cycle, plant, cfg.horizon(), soc_init=cfg.soc_init, soc_target=cfg.soc_target)
        frame = run_controller(sim, state.controller).trace_frame()
        residual = float(frame["residual"].abs().max())
        details[tag] = {"max_residual_w": residual, "soc_min": float(frame["soc"].min()), "soc_max": float(frame["soc"].max())}
        if residual > params["balance_tolerance"]:
            failures.append(f"{tag}: power balance residual {residual:.2e} W")
        if frame["soc"].min() < SOC_MIN or frame["soc"].max() > SOC_MAX:
            failures.append(f"{tag}: SOC left the [{SOC_MIN}, {SOC_MAX}] window")
    battery = initial_state(plant, cfg.soc_init).battery
    if battery_step(battery, 0.0, cfg.dt).soc != battery.soc:
        failures.append("battery_step with zero power changed SOC")
    return failures, details


def check_soc_correction_consistency(config: AppConfig, params: dict[str, Any]) -> CheckOutcome:
    economies = {}
    for key in ("soc_low", "soc_high"):
        cfg = _base_config(config, params, strategy=StrategyTag.CONST_EF, ef=1.25, soc_init=params[key])
        economies[key] = run_scenario(cfg).corrected_fuel_economy
    gap = abs(economies["soc_low"] - economies["soc_high"]) / max(economies.values())
    failures = [] if gap <= params["tolerance"] else [f"corrected economies differ by {100 * gap:.2f}%"]
    return failures, {**economies, "gap_pct": 100.0 * gap}


def check_grid_convergence(config: AppConfig, params: dict[str, Any]) -> CheckOutcome:
    cfg = _base_config(config, params)
    cycle = load_cycle(cfg.cycle, cfg.dt)
    plant = plant_for_config(cfg)
    ctx = cfg.ems_context()
    coarse = dp_solve(cycle, plant, ctx, DpGrid(), cfg.soc_init)
    fine = dp_solve(cycle, plant, ctx, DpGrid(soc_points=401, p_bat_points=201), cfg.soc_init)
    change = abs(fine.fuel_l - coarse.fuel_l) / coarse.fuel_l
    failures = [] if change < params["tolerance"] else [f"DP fuel moved {100 * change:.3f}% on the fine grid"]
    return failures, {"coarse_l": coarse.fuel_l, "fine_l": fine.fuel_l, "change_pct": 100.0 * change}


CHECKS: dict[str, Callable[[AppConfig, dict[str, Any]], CheckOutcome]] = {
    "hamiltonian_argmin": check_hamiltonian_argmin,
    "dp_dominance": check_dp_dominance,
    "pmp_equivalence": check_pmp_equivalence,
    "gradient_fidelity": check_gradient_fidelity,
    "correction_recovery": check_correction_recovery,
    "pearson_oracle": check_pearson_oracle,
    "learning_signal": check_learning_signal,
    "tau_trend": check_tau_trend,
    "disturbance_robustness": check_disturbance_robustness,
    "soc_invariants": check_soc_invariants,
    "soc_correction_consistency": check_soc_correction_consistency,
    "grid_convergence": check_grid_convergence,
}


def _run_single_criterion(criterion: AcceptanceCriterion, config: AppConfig) -> CriterionResult:
    result = CriterionResult(criterion_id=criterion.id, title=criterion.title, passed=False)
    check = CHECKS.get(criterion.check)
    if check is None:
        result.failures.append(f"unknown check: {criterion.check}")
        return result
    started = time.perf_counter()
    try:
        failures, details = check(config, criterion.params)
    except Exception as exc:
        LOGGER.exception("Criterion %s raised.", criterion.id)
        result.failures.append(f"execution error: {exc}")
        return result
    finally:
        result.elapsed_s = time.perf_counter() - started
    if criterion.budget_s and result.elapsed_s > criterion.budget_s:
        failures.append(f"runtime {result.elapsed_s:.1f}s over budget {criterion.budget_s:.0f}s")
    result.failures = failures
    result.details = details
    result.passed = not failures
    return result


def _print_results(results: list[CriterionResult], show_details: bool = True) -> None:
    print("Acceptance results")
    print("=" * 72)
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{status} | {result.criterion_id} | {result.title} | {result.elapsed_s:.1f}s")
        if show_details and result.details:
            print(f"  details: {json.dumps(result.details, default=float)}")
        for failure in result.failures:
            print(f"  - {failure}")
        print("-" * 72)
    print("=" * 72)
    passed_count = sum(1 for item in results if item.passed)
    print(f"Summary: {passed_count}/{len(results)} criteria passed.")


def run(args: argparse.Namespace) -> int:
    config = AppConfig.from_env(env_file=args.env_file)
    configure_logging("WARNING" if args.quiet else config.log_level)
    criteria = _filter_criteria(_load_criteria(Path(args.criteria_file).resolve()), args.criterion)
    results = [_run_single_criterion(criterion, config) for criterion in criteria]
    _print_results(results, show_details=not args.quiet)
    return 0 if all(result.passed for result in results) else 1


def main() -> int:
    return run(parse_args())


if __name__ == "__main__":
    raise SystemExit(main())
