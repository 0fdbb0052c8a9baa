"""tests for LangGraph scenario orchestration and routing."""

from __future__ import annotations

import sys
import tempfile
import unittest
from pathlib import Path
from types import SimpleNamespace
from unittest.mock import patch

import numpy as np

PROJECT_ROOT = Path(__file__).resolve().parents[1]
SRC_PATH = PROJECT_ROOT / "src"
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

from hev_energy_lab.constants import EnvTag, StrategyTag  # noqa: E402
from hev_energy_lab.cycle.drive_cycle import cycle_from_speeds  # noqa: E402
from hev_energy_lab.ems import RuleBasedController  # noqa: E402
from hev_energy_lab.errors import ConfigError  # noqa: E402
from hev_energy_lab.harness.graph import GraphDependencies, run_graph, run_scenario  # noqa: E402
from hev_energy_lab.harness.registry import StrategyDefinition, get_strategy, prepare_scenario  # noqa: E402
from hev_energy_lab.harness.state import RunConfig, ScenarioState  # noqa: E402
from hev_energy_lab.harness.store import ResultsStore  # noqa: E402
from hev_energy_lab.harness.studies import compare_strategies, disturbance_study  # noqa: E402


def _short_cycle(name: str = "short", dt: float = 1.0):
    speeds = np.concatenate((np.linspace(0.0, 14.0, 10), np.full(15, 14.0), np.linspace(14.0, 0.0, 8)))
    return cycle_from_speeds(name, speeds)


class TestGraphOrchestration(unittest.TestCase):
    def test_ready_strategy_skips_preparation_and_stores_run(self) -> None:
        with tempfile.TemporaryDirectory() as tmp_dir:
            store = ResultsStore(Path(tmp_dir) / "runs.db")
            config = RunConfig(strategy=StrategyTag.RB)

            with patch("hev_energy_lab.harness.graph.load_cycle", side_effect=_short_cycle):
                final_state = run_graph(ScenarioState(config=config), deps=GraphDependencies(store=store))

            runs = store.list_runs()

        self.assertEqual(
            final_state.events,
            ["SCENARIO_STARTED", "CYCLE_LOADED", "STRATEGY_READY", "SIMULATION_COMPLETED", "REPORT_STORED"],
        )
        self.assertEqual(len(runs), 1)
        self.assertEqual(runs[0]["run_id"], final_state.run_id)
        self.assertEqual(runs[0]["strategy"], "rb")
        self.assertEqual(len(final_state.report.trace), 33)

    def test_unready_strategy_routes_through_preparation(self) -> None:
        calls: list[str] = []

        def _fake_builder(state: ScenarioState):
            calls.append(state.config.strategy.value)
            return RuleBasedController()

        definition = StrategyDefinition(StrategyTag.DP, ready=lambda cfg: False, builder=_fake_builder)
        with patch("hev_energy_lab.harness.graph.load_cycle", side_effect=_short_cycle), patch(
            "hev_energy_lab.harness.graph.get_strategy", return_value=definition
        ):
            final_state = run_graph(ScenarioState(config=RunConfig(strategy=StrategyTag.DP)))

        self.assertEqual(calls, ["dp"])
        self.assertIn("STRATEGY_PREPARATION_STARTED", final_state.events)
        self.assertIn("STRATEGY_PREPARED", final_state.events)
        self.assertNotIn("STRATEGY_READY", final_state.events)
        self.assertEqual(final_state.events[-1], "REPORT_STORE_SKIPPED")
        self.assertIsNone(final_state.run_id)

    def test_constant_ef_with_value_is_ready(self) -> None:
        with patch("hev_energy_lab.harness.graph.load_cycle", side_effect=_short_cycle):
            report = run_scenario(RunConfig(strategy=StrategyTag.CONST_EF, ef=1.25))

        self.assertEqual(report.strategy, StrategyTag.CONST_EF)
        self.assertTrue(all(row.ef == 1.25 for row in report.trace if row.v > 0.0 and row.ef is not None))
        self.assertGreaterEqual(report.fuel_l, 0.0)

    def test_unknown_strategy_is_a_config_error(self) -> None:
        with self.assertRaises(ConfigError):
            get_strategy("fuzzy")

    def test_prepare_scenario_builds_a_controller(self) -> None:
        with patch("hev_energy_lab.harness.registry.load_cycle", side_effect=_short_cycle):
            state = prepare_scenario(RunConfig(strategy=StrategyTag.A_ECMS))

        self.assertIsNotNone(state.controller)
        self.assertEqual(state.cycle.name, "urban300")


class TestStrategyComparison(unittest.TestCase):
    def test_rule_based_reference_saves_nothing(self) -> None:
        with patch("hev_energy_lab.harness.graph.load_cycle", side_effect=_short_cycle):
            result = compare_strategies(RunConfig(), [StrategyTag.RB])

        self.assertEqual(result.table["strategy"].tolist(), ["rb"])
        self.assertEqual(result.table.loc[0, "fuel_savings_pct"], 0.0)

    def test_comparison_adds_the_reference_run(self) -> None:
        with patch("hev_energy_lab.harness.graph.load_cycle", side_effect=_short_cycle):
            result = compare_strategies(RunConfig(), [StrategyTag.A_ECMS])

        self.assertEqual(set(result.reports), {StrategyTag.A_ECMS, StrategyTag.RB})
        self.assertEqual(len(result.table), 1)

    def test_empty_strategy_list_is_rejected(self) -> None:
        with self.assertRaises(ConfigError):
            compare_strategies(RunConfig(), [])


class TestDisturbanceStudy(unittest.TestCase):
    def test_each_level_averages_five_seeds_by_default(self) -> None:
        seeds: list[tuple[float, int]] = []

        def _fake_evaluate(actor, env, level, seed):
            seeds.append((level, seed))
            return SimpleNamespace(fuel_l=0.1 + level, fluctuation_pct=1.0, final_soc=0.34, terminated=False)

        with patch("hev_energy_lab.harness.studies.load_cycle", side_effect=_short_cycle), patch(
            "hev_energy_lab.harness.studies.make_env", return_value=object()
        ), patch("hev_energy_lab.harness.studies.evaluate_policy", side_effect=_fake_evaluate):
            table = disturbance_study(RunConfig(seed=7), levels=(0.1,), policies={EnvTag.RL_ECMS: object()})

        self.assertEqual(seeds, [(0.0, 7)] + [(0.1, 7 + k) for k in range(5)])
        self.assertEqual(len(table), 1)
        self.assertAlmostEqual(table.loc[0, "fuel_l"], 0.2)
        self.assertAlmostEqual(table.loc[0, "fuel_change_pct"], 100.0)


if __name__ == "__main__":
    unittest.main()
