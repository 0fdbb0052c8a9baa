from hev_energy_lab.harness.calibration import CalibrationResult, calibration_pipeline
from hev_energy_lab.harness.graph import GraphDependencies, build_graph, run_graph, run_scenario
from hev_energy_lab.harness.loopback import LoopbackReport, SignalSpec, hil_loopback
from hev_energy_lab.harness.registry import STRATEGY_REGISTRY, get_strategy, plant_for_config, prepare_scenario
from hev_energy_lab.harness.report import (
    build_report,
    export_operating_points,
    export_report,
    read_report,
    report_schema,
    write_schema,
)
from hev_energy_lab.harness.state import DisturbanceSpec, MetricsReport, RunConfig, ScenarioState
from hev_energy_lab.harness.store import ResultsStore
from hev_energy_lab.harness.studies import compare_strategies, disturbance_study, tau_sweep, tune_aecms

__all__ = [
    "STRATEGY_REGISTRY",
    "CalibrationResult",
    "DisturbanceSpec",
    "GraphDependencies",
    "LoopbackReport",
    "MetricsReport",
    "ResultsStore",
    "RunConfig",
    "ScenarioState",
    "SignalSpec",
    "build_graph",
    "build_report",
    "calibration_pipeline",
    "compare_strategies",
    "disturbance_study",
    "export_operating_points",
    "export_report",
    "get_strategy",
    "hil_loopback",
    "plant_for_config",
    "prepare_scenario",
    "read_report",
    "report_schema",
    "run_graph",
    "run_scenario",
    "tau_sweep",
    "tune_aecms",
    "write_schema",
]
