"""CLI entrypoint for the hybrid-vehicle energy-management lab."""

from __future__ import annotations

import argparse
import json
import logging
from dataclasses import asdict, replace
from pathlib import Path

import pandas as pd
from pydantic import ValidationError

from hev_energy_lab.calibrate.correction import TrainingSettings
from hev_energy_lab.config import AppConfig
from hev_energy_lab.constants import EnvTag, ModelArch, ReportFormat, StrategyTag
from hev_energy_lab.cycle.drive_cycle import load_cycle
from hev_energy_lab.errors import ConfigError
from hev_energy_lab.harness.calibration import calibration_pipeline
from hev_energy_lab.harness.graph import build_dependencies_from_config, run_graph
from hev_energy_lab.harness.loopback import hil_loopback
from hev_energy_lab.harness.registry import ENV_FOR_STRATEGY, plant_for_config, prepare_scenario
from hev_energy_lab.harness.report import export_operating_points, export_report, read_report, write_schema
from hev_energy_lab.harness.state import DISTURBANCE_LEVELS, RunConfig, ScenarioState
from hev_energy_lab.harness.studies import compare_strategies, disturbance_study, soc_trend, tau_sweep
from hev_energy_lab.logging_config import configure_logging
from hev_energy_lab.rlagent.trainer import evaluate_policy, load_policy, make_env, save_policy, train
from hev_energy_lab.simulation import Simulation

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

LEARNING_STRATEGIES = [StrategyTag.RL_ECMS.value, StrategyTag.RL.value]
STRATEGY_CHOICES = [tag.value for tag in StrategyTag]


def _float_list(raw: str) -> list[float]:
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {raw!r}") from exc


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cycle", help="Bundled cycle name or path to a cycle CSV.")
    parser.add_argument("--strategy", choices=STRATEGY_CHOICES, help="Energy-management strategy.")
    parser.add_argument("--soc-init", type=float, help="Initial battery SOC (fraction).")
    parser.add_argument("--soc-target", type=float, help="Target battery SOC (fraction).")
    parser.add_argument("--ef", type=float, help="Constant equivalence factor; omitted means shooting search.")
    parser.add_argument("--tau", type=float, help="Reward weight on the SOC deficit.")
    parser.add_argument("--episodes", type=int, help="Training episodes for learning strategies.")
    parser.add_argument("--disturbance", type=float, help="Multiplicative state disturbance level.")
    parser.add_argument("--policy", help="Saved actor to use instead of training.")
    parser.add_argument("--fuel-model", choices=["static", "averaged", "corrected"], help="Fuel accounting.")
    parser.add_argument("--fuel-correction", help="Saved fuel correction model (for --fuel-model corrected).")
    parser.add_argument("--coolant-correction", help="Saved coolant correction model.")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hev-energy-lab",
        description="Energy management strategies for a power-split hybrid vehicle",
    )
    parser.add_argument("--config", help="Flat KEY=VALUE configuration file.")
    parser.add_argument("--seed", type=int, help="Seed for every random draw of the run.")
    parser.add_argument("--full", action="store_true", help="Use full-length cycles instead of desk-scale ones.")
    parser.add_argument("--env-file", default=".env", help="Path to an optional dotenv file.")
    parser.add_argument("--log-file", help="Also write logs to this file.")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Run one strategy over a cycle and report metrics.")
    _add_run_options(simulate)
    simulate.add_argument("--output", help="Write the metrics report to this path.")
    simulate.add_argument("--format", choices=[fmt.value for fmt in ReportFormat], default=ReportFormat.JSON.value)
    simulate.add_argument("--dp-policy", help="For dp: also write the policy table as CSV.")

    train_cmd = commands.add_parser("train", help="Train a TD3 policy.")
    _add_run_options(train_cmd)
    train_cmd.add_argument("--policy-out", required=True, help="Where to save the trained actor.")
    train_cmd.add_argument("--curve-out", help="Write the learning curve CSV here.")

    evaluate = commands.add_parser("evaluate", help="Roll out a saved policy without exploration noise.")
    _add_run_options(evaluate)
    evaluate.add_argument("--seeds", type=int, default=1, help="Disturbance seeds to average.")

    compare = commands.add_parser("compare", help="Compare strategies against the rule-based baseline.")
    _add_run_options(compare)
    compare.add_argument(
        "--strategies",
        default="dp,rl-ecms,rl,a-ecms,rb",
        help="Comma-separated strategy tags.",
    )
    compare.add_argument("--output", help="Write the comparison table as CSV.")

    sweep = commands.add_parser("sweep-tau", help="Retrain across reward weights.")
    _add_run_options(sweep)
    sweep.add_argument("--taus", type=_float_list, default=[1.5, 2.5, 3.5], help="Comma-separated tau values.")
    sweep.add_argument("--output", help="Write the sweep table as CSV.")

    disturb = commands.add_parser("disturb", help="Disturbance study for both learned policies.")
    _add_run_options(disturb)
    disturb.add_argument("--levels", type=_float_list, default=list(DISTURBANCE_LEVELS))
    disturb.add_argument("--seeds", type=int, default=5)
    disturb.add_argument("--rl-ecms-policy", help="Saved RL-ECMS actor.")
    disturb.add_argument("--rl-policy", help="Saved conventional RL actor.")
    disturb.add_argument("--output", help="Write the study table as CSV.")

    calibrate = commands.add_parser("calibrate", help="Train and compare fuel/coolant correction models.")
    _add_run_options(calibrate)
    calibrate.add_argument("--archs", default="rnn,lstm,mlp", help="Comma-separated architectures.")
    calibrate.add_argument("--epochs", type=int, help="Training epochs per model.")
    calibrate.add_argument("--use-selected", action="store_true", help="Fuel model on the selected feature set.")
    calibrate.add_argument("--output-dir", help="Save models, dataset and comparison table here.")

    export = commands.add_parser("export", help="Write the report schema or convert a report.")
    export.add_argument("--schema", help="Write the JSON schema of metrics reports to this path.")
    export.add_argument("--report", help="Report to convert (JSON, or CSV with its summary file).")
    export.add_argument("--output", help="Converted report path.")
    export.add_argument("--format", choices=[fmt.value for fmt in ReportFormat], default=ReportFormat.CSV.value)

    points = commands.add_parser("operating-points", help="Engine operating points of one run as CSV.")
    _add_run_options(points)
    points.add_argument("--output", required=True)

    hil = commands.add_parser("hil", help="Run a strategy through the in-process loopback rig.")
    _add_run_options(hil)
    hil.add_argument("--frame-period", type=float, default=1.0, help="Controller frame period in seconds.")
    return parser


def _run_config(args: argparse.Namespace, config: AppConfig) -> RunConfig:
    options = {
        "cycle": getattr(args, "cycle", None),
        "strategy": getattr(args, "strategy", None),
        "seed": args.seed,
        "soc_init": getattr(args, "soc_init", None),
        "soc_target": getattr(args, "soc_target", None),
        "ef": getattr(args, "ef", None),
        "tau": getattr(args, "tau", None),
        "episodes": getattr(args, "episodes", None),
        "disturbance": getattr(args, "disturbance", None),
        "policy_path": getattr(args, "policy", None),
        "fuel_model": getattr(args, "fuel_model", None),
        "fuel_correction_path": getattr(args, "fuel_correction", None),
        "coolant_correction_path": getattr(args, "coolant_correction", None),
    }
    return RunConfig.from_app_config(config, **options)


def _print_table(title: str, frame: pd.DataFrame) -> None:
    print(title)
    print(frame.to_string(index=False, float_format=lambda value: f"{value:.4f}"))


def _write_table(frame: pd.DataFrame, output: str | None) -> None:
    if output:
        target = Path(output)
        target.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(target, index=False)
        LOGGER.info("Wrote %d rows to %s", len(frame), target)


def _learning_tag(cfg: RunConfig) -> EnvTag:
    if cfg.strategy not in ENV_FOR_STRATEGY:
        raise ConfigError(f"{cfg.strategy.value} is not a learning strategy; use one of {LEARNING_STRATEGIES}")
    return ENV_FOR_STRATEGY[cfg.strategy]


def cmd_simulate(args: argparse.Namespace, config: AppConfig) -> int:
    cfg = _run_config(args, config)
    final_state = run_graph(ScenarioState(config=cfg), deps=build_dependencies_from_config(cfg))
    report = final_state.report
    if report is None:
        raise RuntimeError("Scenario finished without a report.")
    print("Scenario summary")
    print(json.dumps(report.summary(), indent=1))
    print(f"events: {final_state.events}")
    if args.output:
        export_report(report, args.output, args.format)
    if args.dp_policy:
        if cfg.strategy != StrategyTag.DP:
            raise ConfigError("--dp-policy needs --strategy dp")
        final_state.training.export_policy_csv(args.dp_policy)
    return EXIT_OK


def cmd_train(args: argparse.Namespace, config: AppConfig) -> int:
    cfg = _run_config(args, config)
    env = make_env(
        _learning_tag(cfg),
        load_cycle(cfg.cycle, cfg.dt),
        plant_for_config(cfg),
        cfg.tau,
        cfg.ems_context(),
        cfg.horizon(),
        cfg.soc_init,
    )
    result = train(env, cfg.hyperparameters(), cfg.seed)
    save_policy(args.policy_out, result)
    if args.curve_out:
        result.export_curve_csv(args.curve_out)
    last = result.curve[-1] if result.curve else None
    print("Training summary")
    print(f"episodes: {len(result.curve)}")
    if last is not None:
        print(f"last return: {last.total_return:.4f} | fuel: {last.fuel_l:.4f} L | final SOC: {last.final_soc:.4f}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, config: AppConfig) -> int:
    cfg = _run_config(args, config)
    if not cfg.policy_path:
        raise ConfigError("evaluate needs --policy")
    actor, stored_tag = load_policy(cfg.policy_path)
    env = make_env(
        stored_tag,
        load_cycle(cfg.cycle, cfg.dt),
        plant_for_config(cfg),
        cfg.tau,
        cfg.ems_context(),
        cfg.horizon(),
        cfg.soc_init,
    )
    rows = []
    for offset in range(max(args.seeds, 1)):
        metrics = evaluate_policy(actor, env, cfg.disturbance, cfg.seed + offset)
        rows.append({"seed": cfg.seed + offset, **asdict(metrics)})
    _print_table(f"Policy evaluation ({stored_tag.value}, disturbance {cfg.disturbance:.2f})", pd.DataFrame(rows))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace, config: AppConfig) -> int:
    cfg = _run_config(args, config)
    strategies = [StrategyTag(part.strip()) for part in args.strategies.split(",") if part.strip()]
    result = compare_strategies(cfg, strategies, deps=build_dependencies_from_config(cfg))
    _print_table(f"Strategy comparison on {cfg.cycle}", result.table)
    _write_table(result.table, args.output)
    return EXIT_OK


def cmd_sweep_tau(args: argparse.Namespace, config: AppConfig) -> int:
    cfg = _run_config(args, config)
    if cfg.strategy not in ENV_FOR_STRATEGY:
        cfg = cfg.model_copy(update={"strategy": StrategyTag.RL_ECMS})
    sweep = tau_sweep(cfg, args.taus, deps=build_dependencies_from_config(cfg))
    _print_table(f"Reward weight sweep ({cfg.strategy.value})", sweep)
    print(f"final SOC rank correlation with tau: {soc_trend(sweep):.3f}")
    _write_table(sweep, args.output)
    return EXIT_OK


def cmd_disturb(args: argparse.Namespace, config: AppConfig) -> int:
    cfg = _run_config(args, config)
    policies = None
    if args.rl_ecms_policy and args.rl_policy:
        policies = {}
        for path, expected in ((args.rl_ecms_policy, EnvTag.RL_ECMS), (args.rl_policy, EnvTag.CONVENTIONAL)):
            actor, tag = load_policy(path)
            if tag != expected:
                raise ConfigError(f"{path} holds a {tag.value} policy, expected {expected.value}")
            policies[tag] = actor
    elif args.rl_ecms_policy or args.rl_policy:
        raise ConfigError("disturb needs both --rl-ecms-policy and --rl-policy, or neither")
    study = disturbance_study(cfg, args.levels, policies=policies, seeds=args.seeds)
    _print_table("Disturbance study", study)
    _write_table(study, args.output)
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace, config: AppConfig) -> int:
    cfg = _run_config(args, config)
    archs = tuple(ModelArch(part.strip()) for part in args.archs.split(",") if part.strip())
    settings = TrainingSettings(seed=cfg.seed)
    if args.epochs is not None:
        settings = settings.model_copy(update={"epochs": args.epochs})
    result = calibration_pipeline(cfg, settings=settings, archs=archs, use_selected_features=args.use_selected)
    print("Feature importance (top 8)")
    for name, weight in result.importance.ranked()[:8]:
        print(f"{name}: {weight:.4f}")
    print(f"selected features: {result.selected}")
    _print_table("Fuel model comparison (g/s)", result.comparison)
    if result.coolant is not None:
        print(f"coolant correction MAE: {result.coolant.validation.mae:.4f} K")
    if args.output_dir:
        target = Path(args.output_dir)
        result.save_models(target)
        result.dataset.to_csv(target / "calibration_dataset.csv")
        _write_table(result.comparison, str(target / "fuel_model_comparison.csv"))
    return EXIT_OK


def cmd_export(args: argparse.Namespace, config: AppConfig) -> int:
    if not args.schema and not args.report:
        raise ConfigError("export needs --schema and/or --report")
    if args.schema:
        write_schema(args.schema)
    if args.report:
        if not args.output:
            raise ConfigError("--report needs --output")
        export_report(read_report(args.report), args.output, args.format)
    return EXIT_OK


def cmd_operating_points(args: argparse.Namespace, config: AppConfig) -> int:
    cfg = _run_config(args, config)
    final_state = run_graph(ScenarioState(config=cfg))
    export_operating_points(final_state.simulation, args.output)
    return EXIT_OK


def cmd_hil(args: argparse.Namespace, config: AppConfig) -> int:
    cfg = _run_config(args, config)
    state = prepare_scenario(cfg)

    def fresh() -> Simulation:
        return Simulation(state.cycle, state.plant, cfg.horizon(), soc_init=cfg.soc_init, soc_target=cfg.soc_target)

    report = hil_loopback(fresh(), fresh(), state.controller, args.frame_period)
    print("Loopback summary")
    print(f"frames: {report.frames}")
    print(f"fuel: {report.loopback_fuel_l:.4f} L vs {report.reference_fuel_l:.4f} L ({report.fuel_deviation_pct:.3f}%)")
    print(f"final SOC: {report.loopback_final_soc:.4f} vs {report.reference_final_soc:.4f}")
    _print_table("Channel deviations", report.deviations)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "sweep-tau": cmd_sweep_tau,
    "disturb": cmd_disturb,
    "calibrate": cmd_calibrate,
    "export": cmd_export,
    "operating-points": cmd_operating_points,
    "hil": cmd_hil,
}


def run(args: argparse.Namespace) -> int:
    try:
        config = AppConfig.from_env(env_file=args.env_file, config_file=args.config)
        if args.full:
            config = replace(config, full=True)
    except ValueError as exc:
        configure_logging()
        LOGGER.exception("Configuration rejected.")
        print(f"Invalid configuration: {exc}")
        return EXIT_VALIDATION
    configure_logging(config.log_level, args.log_file)

    LOGGER.info("Running %s.", args.command)
    try:
        return COMMANDS[args.command](args, config)
    except (ValidationError, ValueError) as exc:
        LOGGER.exception("%s rejected its input.", args.command)
        print(f"Validation failed: {exc}")
        return EXIT_VALIDATION
    except (RuntimeError, OSError) as exc:
        LOGGER.exception("%s aborted.", args.command)
        print(f"Execution failed: {exc}")
        return EXIT_RUNTIME


def main() -> int:
    parser = build_parser()
    args = parser.parse_args()
    return run(args)


if __name__ == "__main__":
    raise SystemExit(main())
