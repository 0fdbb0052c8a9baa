"""tests for the SQLite results store, report export and run configuration."""

from __future__ import annotations

import json
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

PROJECT_ROOT = Path(__file__).resolve().parents[1]
SRC_PATH = PROJECT_ROOT / "src"
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

from hev_energy_lab.config import AppConfig  # noqa: E402
from hev_energy_lab.constants import StrategyTag  # noqa: E402
from hev_energy_lab.cycle.drive_cycle import cycle_from_speeds  # noqa: E402
from hev_energy_lab.ems import EmsContext, RuleBasedController, run_controller  # noqa: E402
from hev_energy_lab.errors import ConfigError  # noqa: E402
from hev_energy_lab.harness.loopback import SignalSpec, hil_loopback  # noqa: E402
from hev_energy_lab.harness.report import (  # noqa: E402
    build_report,
    count_start_stops,
    export_operating_points,
    export_report,
    fuel_savings_pct,
    operating_points,
    read_report,
    write_schema,
)
from hev_energy_lab.harness.state import MetricsReport, RunConfig  # noqa: E402
from hev_energy_lab.harness.store import ResultsStore  # noqa: E402
from hev_energy_lab.powertrain.plant import build_plant  # noqa: E402
from hev_energy_lab.simulation import Simulation  # noqa: E402


def _speeds() -> np.ndarray:
    return np.concatenate((np.linspace(0.0, 16.0, 12), np.full(20, 16.0), np.linspace(16.0, 0.0, 10)))


def _rule_based_report(seed: int = 7) -> MetricsReport:
    sim = Simulation(cycle_from_speeds("short", _speeds()), build_plant(flat_battery=True))
    run_controller(sim, RuleBasedController())
    return build_report(sim, StrategyTag.RB, EmsContext(), seed)


class TestResultsStore(unittest.TestCase):
    def test_runs_are_listed_and_filtered(self) -> None:
        report = _rule_based_report()
        with tempfile.TemporaryDirectory() as tmp_dir:
            store = ResultsStore(Path(tmp_dir) / "runs.db")
            first = store.record_run(RunConfig(strategy=StrategyTag.RB), report)
            second = store.record_run(RunConfig(strategy=StrategyTag.RB, seed=8), report)

            all_runs = store.list_runs()
            rb_runs = store.list_runs(strategy="rb")
            dp_runs = store.list_runs(strategy="dp")

        self.assertEqual([row["run_id"] for row in all_runs], [first, second])
        self.assertEqual(len(rb_runs), 2)
        self.assertEqual(dp_runs, [])
        self.assertAlmostEqual(all_runs[0]["fuel_l"], report.fuel_l)

    def test_runs_are_found_by_config_hash(self) -> None:
        report = _rule_based_report()
        config = RunConfig(strategy=StrategyTag.RB, seed=3)
        with tempfile.TemporaryDirectory() as tmp_dir:
            store = ResultsStore(Path(tmp_dir) / "runs.db")
            run_id = store.record_run(config, report)
            store.record_run(RunConfig(strategy=StrategyTag.RB, seed=4), report)

            matches = store.runs_for_config(RunConfig(strategy=StrategyTag.RB, seed=3))

        self.assertEqual([row["run_id"] for row in matches], [run_id])
        self.assertEqual(matches[0]["config_hash"], config.config_hash())

    def test_learning_curve_rows_are_upserted(self) -> None:
        report = _rule_based_report()
        curve = pd.DataFrame({"episode": [0, 1], "return": [-5.0, -4.0], "fuel": [0.2, 0.19], "final_soc": [0.33, 0.34]})
        with tempfile.TemporaryDirectory() as tmp_dir:
            store = ResultsStore(Path(tmp_dir) / "runs.db")
            run_id = store.record_run(RunConfig(strategy=StrategyTag.RB), report)
            store.record_learning_curve(run_id, curve)
            curve.loc[1, "return"] = -3.5
            written = store.record_learning_curve(run_id, curve)

            stored = store.get_learning_curve(run_id)

        self.assertEqual(written, 2)
        self.assertEqual(stored["episode"].tolist(), [0, 1])
        self.assertEqual(stored["return"].tolist(), [-5.0, -3.5])


class TestReportExport(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.report = _rule_based_report()

    def test_json_report_reads_back(self) -> None:
        with tempfile.TemporaryDirectory() as tmp_dir:
            path = export_report(self.report, Path(tmp_dir) / "rb.json")
            loaded = read_report(path)

        self.assertEqual(loaded.summary(), self.report.summary())
        self.assertEqual(len(loaded.trace), len(self.report.trace))

    def test_csv_report_writes_one_row_per_sample_and_a_summary(self) -> None:
        with tempfile.TemporaryDirectory() as tmp_dir:
            path = export_report(self.report, Path(tmp_dir) / "rb.csv", fmt="csv")
            lines = path.read_text(encoding="utf-8").strip().splitlines()
            summary = json.loads((Path(tmp_dir) / "rb.summary.json").read_text(encoding="utf-8"))
            loaded = read_report(path)

        self.assertEqual(len(lines), len(self.report.trace) + 1)
        self.assertTrue(lines[0].startswith("t,v,soc"))
        self.assertEqual(summary["strategy"], "rb")
        self.assertAlmostEqual(loaded.fuel_l, self.report.fuel_l)

    def test_schema_file_describes_the_report(self) -> None:
        with tempfile.TemporaryDirectory() as tmp_dir:
            schema = json.loads(write_schema(Path(tmp_dir) / "schema.json").read_text(encoding="utf-8"))

        self.assertIn("fuel_economy", schema["properties"])
        self.assertIn("trace", schema["properties"])

    def test_inconsistent_economy_is_rejected(self) -> None:
        payload = self.report.summary()
        payload["fuel_economy"] = payload["fuel_economy"] + 1.0

        with self.assertRaises(ValidationError):
            MetricsReport.model_validate(payload)

    def test_operating_points_cover_engine_on_steps(self) -> None:
        sim = Simulation(cycle_from_speeds("short", _speeds()), build_plant(flat_battery=True))
        run_controller(sim, RuleBasedController())
        engine_on = int((sim.trace_frame()["engine_on"] > 0.0).sum())

        with tempfile.TemporaryDirectory() as tmp_dir:
            path = export_operating_points(sim, Path(tmp_dir) / "points.csv")
            written = pd.read_csv(path)
        points = operating_points(sim)

        self.assertGreater(engine_on, 0)
        self.assertEqual(len(points), engine_on)
        self.assertEqual(list(written.columns), ["t", "omega", "torque", "p_ice", "bsfc"])
        self.assertEqual(len(written), engine_on)
        self.assertTrue((points["bsfc"] > 0.0).all())

    def test_start_stops_count_off_to_on_edges(self) -> None:
        self.assertEqual(count_start_stops(np.array([0.0, 5.0, 5.0, 0.0, 3.0, 0.0])), 2)
        self.assertEqual(count_start_stops(np.array([4.0, 4.0])), 1)
        self.assertEqual(count_start_stops(np.zeros(3)), 0)

    def test_savings_against_reference(self) -> None:
        better = self.report.model_copy(update={"corrected_fuel_economy": self.report.corrected_fuel_economy * 0.9})

        self.assertAlmostEqual(fuel_savings_pct(better, self.report), 10.0)
        self.assertEqual(fuel_savings_pct(self.report, self.report), 0.0)


class TestLoopback(unittest.TestCase):
    def test_quantization_error_is_within_half_resolution(self) -> None:
        spec = SignalSpec("p_bat", -100.0e3, 100.0e3)

        for value in (-73_211.4, 0.0, 12_345.6, 99_999.9):
            self.assertLessEqual(abs(spec.quantize(value) - value), spec.resolution / 2 + 1e-9)
        self.assertEqual(spec.encode(5.0e6), 2**16 - 1)
        self.assertEqual(spec.quantize(-5.0e6), -100.0e3)

    def test_loopback_tracks_the_direct_run(self) -> None:
        plant = build_plant(flat_battery=True)
        cycle = cycle_from_speeds("short", _speeds())

        report = hil_loopback(Simulation(cycle, plant), Simulation(cycle, plant), RuleBasedController())

        self.assertEqual(report.frames, len(cycle))
        self.assertLess(abs(report.fuel_deviation_pct), 5.0)
        self.assertEqual(report.deviations["channel"].tolist(), ["soc", "p_ice", "p_bat", "fuel_l", "T_cool"])


class TestRunConfig(unittest.TestCase):
    def test_soc_outside_window_is_rejected(self) -> None:
        with self.assertRaises(ValidationError):
            RunConfig(soc_init=0.9)

    def test_corrected_fuel_model_needs_a_model_path(self) -> None:
        with self.assertRaises(ValidationError):
            RunConfig(fuel_model="corrected")

    def test_overrides_reach_the_component_configs(self) -> None:
        config = RunConfig(overrides={"dp.soc_points": "81", "ems.epsilon": "0.002"})

        self.assertEqual(config.dp_grid().soc_points, 81)
        self.assertAlmostEqual(config.ems_context().epsilon, 0.002)
        self.assertAlmostEqual(config.ems_context().soc_ref, config.soc_target)

    def test_unknown_override_is_a_config_error(self) -> None:
        with self.assertRaises(ConfigError):
            RunConfig(overrides={"ems.nonsense": "1"}).ems_context()

    def test_app_config_mapping_feeds_run_config(self) -> None:
        app = AppConfig.from_mapping({"HEV_STRATEGY": "RB", "HEV_SEED": "11", "HEV_HIDDEN_SIZES": "16, 16"})

        config = RunConfig.from_app_config(app)

        self.assertEqual(config.strategy, StrategyTag.RB)
        self.assertEqual(config.seed, 11)
        self.assertEqual(config.hidden_sizes, (16, 16))

    def test_bad_hidden_sizes_are_a_config_error(self) -> None:
        with self.assertRaises(ConfigError):
            AppConfig.from_mapping({"HEV_HIDDEN_SIZES": "64,x"})

    def test_config_hash_is_stable(self) -> None:
        self.assertEqual(RunConfig(seed=1).config_hash(), RunConfig(seed=1).config_hash())
        self.assertNotEqual(RunConfig(seed=1).config_hash(), RunConfig(seed=2).config_hash())


if __name__ == "__main__":
    unittest.main()
