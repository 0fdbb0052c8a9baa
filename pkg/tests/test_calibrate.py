"""tests for truth generation, feature ranking and the correction models."""

from __future__ import annotations

import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

PROJECT_ROOT = Path(__file__).resolve().parents[1]
SRC_PATH = PROJECT_ROOT / "src"
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

from hev_energy_lab.calibrate import (  # noqa: E402
    CorrectionDataset,
    CorrectionModel,
    ImportanceResult,
    TrainingSettings,
    TruthGeneratorSpec,
    averaged_fuel,
    boosted_importance,
    correlation_matrix,
    error_metrics,
    generate_truth,
    pearson,
    select_features,
    train_correction,
)
from hev_energy_lab.calibrate.truth import lag_filter, perturb_fuel  # noqa: E402
from hev_energy_lab.constants import CorrectionTarget, ModelArch  # noqa: E402
from hev_energy_lab.cycle.drive_cycle import cycle_from_speeds  # noqa: E402
from hev_energy_lab.errors import DomainError, SelectionError, UndefinedCorrelationError  # noqa: E402
from hev_energy_lab.powertrain.plant import build_plant  # noqa: E402


def _synthetic_dataset(rows: int = 60, window: int = 3) -> CorrectionDataset:
    rng = np.random.default_rng(4)
    a = np.linspace(0.0, 1.0, rows)
    b = rng.uniform(size=rows)
    mdot_a = 1.0e-3 + 1.0e-3 * a
    mdot_r = mdot_a * 1.1
    engine_on = np.ones(rows, dtype=bool)
    engine_on[5] = False
    frame = pd.DataFrame(
        {
            "t": np.arange(rows, dtype=np.float64),
            "a": a,
            "b": b,
            "p_ice": 20.0e3 * (1.0 + a),
            "engine_on": engine_on,
            "mdot_d": mdot_a * 1.05,
            "mdot_q": mdot_a * 0.95,
            "mdot_a": mdot_a,
            "mdot_r": mdot_r,
            "T_cool_dyn": np.full(rows, 360.0),
            "T_cool_r": np.full(rows, 362.0),
        }
    )
    frame["y_fuel"] = frame["mdot_r"] - frame["mdot_a"]
    frame["y_cool"] = frame["T_cool_r"] - frame["T_cool_dyn"]
    return CorrectionDataset(frame=frame, window=window)


class TestPearson(unittest.TestCase):
    def test_perfect_positive_and_negative_correlation(self) -> None:
        x = [1.0, 2.0, 3.0, 4.0]

        self.assertEqual(pearson(x, [2.0, 4.0, 6.0, 8.0]), 1.0)
        self.assertEqual(pearson(x, [8.0, 6.0, 4.0, 2.0]), -1.0)

    def test_zero_variance_is_undefined(self) -> None:
        with self.assertRaises(UndefinedCorrelationError):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_matches_numpy_on_random_vectors(self) -> None:
        rng = np.random.default_rng(0)
        x = rng.normal(size=50)
        y = 0.5 * x + rng.normal(size=50)

        self.assertAlmostEqual(pearson(x, y), float(np.corrcoef(x, y)[0, 1]), places=12)

    def test_constant_column_gives_nan_entry(self) -> None:
        frame = pd.DataFrame({"a": [1.0, 2.0, 3.0], "b": [5.0, 5.0, 5.0]})

        corr = correlation_matrix(frame, ["a", "b"])

        self.assertTrue(np.isnan(corr.rho("a", "b")))
        self.assertEqual(corr.rho("a", "a"), 1.0)


class TestImportanceAndSelection(unittest.TestCase):
    def test_perfect_predictor_dominates(self) -> None:
        rng = np.random.default_rng(1)
        signal = np.linspace(0.0, 1.0, 200)
        X = np.column_stack((signal, rng.uniform(size=200)))

        result = boosted_importance(X, signal, names=["signal", "noise"])

        self.assertGreaterEqual(result.weights["signal"], 0.99)
        self.assertAlmostEqual(sum(result.weights.values()), 1.0)

    def test_constant_target_is_degenerate(self) -> None:
        result = boosted_importance(np.ones((10, 2)), np.zeros(10), names=["a", "b"])

        self.assertTrue(result.degenerate)
        self.assertEqual(set(result.weights.values()), {0.0})

    def test_duplicate_feature_is_dropped(self) -> None:
        rng = np.random.default_rng(2)
        signal = np.linspace(0.0, 1.0, 100)
        frame = pd.DataFrame({"signal": signal, "signal_copy": signal, "noise": rng.uniform(size=100)})
        names = list(frame.columns)

        importance = boosted_importance(frame, signal, names=names)
        selected = select_features(importance, correlation_matrix(frame, names))

        self.assertIn("signal", selected)
        self.assertNotIn("signal_copy", selected)

    def test_unit_threshold_still_drops_an_exact_duplicate(self) -> None:
        signal = np.linspace(0.0, 1.0, 50)
        frame = pd.DataFrame({"a": signal, "a_copy": signal, "b": np.sin(7.0 * signal)})
        importance = ImportanceResult({"a": 0.5, "a_copy": 0.3, "b": 0.2})

        selected = select_features(importance, correlation_matrix(frame, list(frame.columns)), corr_threshold=1.0)

        self.assertEqual(selected, ["a", "b"])

    def test_invalid_threshold_is_rejected(self) -> None:
        frame = pd.DataFrame({"a": [1.0, 2.0, 3.0]})
        importance = boosted_importance(frame, np.array([1.0, 2.0, 3.0]))

        with self.assertRaises(SelectionError):
            select_features(importance, correlation_matrix(frame, ["a"]), corr_threshold=1.5)


class TestTruthGeneration(unittest.TestCase):
    def test_averaged_fuel_is_the_mean(self) -> None:
        self.assertAlmostEqual(averaged_fuel(2.0e-4, 4.0e-4), 3.0e-4)

    def test_lag_filter_resets_when_inactive(self) -> None:
        lagged = lag_filter(np.array([1.0, 1.0, 1.0]), np.array([True, True, False]), tau=1.0, dt=1.0)

        np.testing.assert_allclose(lagged, [0.5, 0.75, 0.0])

    def test_identity_recipe_reproduces_the_physical_model(self) -> None:
        mdot_a = np.array([1.0e-3, 2.0e-3, 0.0])
        on = np.array([True, True, False])

        measured = perturb_fuel(mdot_a, np.full(3, 200.0), np.full(3, 0.5), on, 1.0, TruthGeneratorSpec.identity())

        np.testing.assert_allclose(measured, mdot_a)

    def test_generated_trace_carries_targets_and_features(self) -> None:
        speeds = np.concatenate((np.linspace(0.0, 15.0, 15), np.full(20, 15.0), np.linspace(15.0, 0.0, 10)))
        cycle = cycle_from_speeds("short", speeds)

        trace = generate_truth(cycle, build_plant(), TruthGeneratorSpec.identity())
        on = trace.frame["engine_on"].to_numpy(dtype=bool)

        self.assertEqual(len(trace), len(cycle))
        self.assertEqual(trace.frame.columns[0], "t")
        np.testing.assert_allclose(trace.frame.loc[on, "mdot_r"], trace.frame.loc[on, "mdot_a"])
        np.testing.assert_allclose(trace.frame["T_cool_r"], trace.frame["T_cool_dyn"])


class TestCorrectionDataset(unittest.TestCase):
    def test_fuel_windows_skip_engine_off_rows(self) -> None:
        windows = _synthetic_dataset().windows(["a", "b"], CorrectionTarget.FUEL)

        self.assertNotIn(5, windows.end_index.tolist())
        self.assertEqual(windows.inputs.shape[1:], (3, 2))

    def test_holdout_windows_do_not_overlap_training(self) -> None:
        dataset = _synthetic_dataset()
        split = dataset.split_row(0.3)

        train, held_out = dataset.split_windows(["a", "b"], CorrectionTarget.COOLANT, 0.3)

        self.assertLess(train.end_index.max(), split)
        self.assertGreaterEqual(held_out.end_index.min(), split + dataset.window - 1)

    def test_rejects_dataset_shorter_than_window(self) -> None:
        frame = _synthetic_dataset().frame.head(3)

        with self.assertRaises(DomainError):
            CorrectionDataset(frame=frame, window=3)

    def test_rejects_missing_values(self) -> None:
        frame = _synthetic_dataset().frame.copy()
        frame.loc[4, "a"] = np.nan

        with self.assertRaises(DomainError):
            CorrectionDataset(frame=frame, window=3)


class TestCorrectionModel(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.dataset = _synthetic_dataset()
        train, held_out = cls.dataset.split_windows(["a", "b"], CorrectionTarget.FUEL, 0.3)
        settings = TrainingSettings(hidden_dim=4, epochs=5, batch_size=16, learning_rate=1e-2)
        cls.trained = train_correction(train, held_out, CorrectionTarget.FUEL, ModelArch.LSTM, settings)

    def test_error_metrics_for_constant_error(self) -> None:
        truth = np.array([1.0, 2.0, 4.0])

        metrics = error_metrics(truth + 0.5, truth)

        self.assertAlmostEqual(metrics.mae, 0.5)
        self.assertAlmostEqual(metrics.mse, 0.25)
        self.assertAlmostEqual(metrics.mre, (0.5 + 0.25 + 0.125) / 3.0)

    def test_training_records_loss_history(self) -> None:
        self.assertEqual(len(self.trained.loss_history), 5)
        self.assertTrue(np.all(np.isfinite(self.trained.loss_history)))

    def test_incomplete_window_passes_base_through_flagged(self) -> None:
        value, incomplete = self.trained.model.apply(np.ones((2, 2)), 1.0e-3)

        self.assertEqual(value, 1.0e-3)
        self.assertTrue(incomplete)

    def test_complete_window_is_corrected_and_non_negative(self) -> None:
        rows = self.dataset.frame[["a", "b"]].to_numpy()[:3]

        value, incomplete = self.trained.model.apply(rows, 1.0e-3)

        self.assertFalse(incomplete)
        self.assertGreaterEqual(value, 0.0)

    def test_saved_model_predicts_identically(self) -> None:
        windows = self.dataset.windows(["a", "b"], CorrectionTarget.FUEL)

        with tempfile.TemporaryDirectory() as tmp_dir:
            path = self.trained.model.save(Path(tmp_dir) / "fuel_lstm.json")
            loaded = CorrectionModel.load(path)

        np.testing.assert_allclose(loaded.predict(windows.inputs), self.trained.model.predict(windows.inputs))
        self.assertEqual(loaded.features, ("a", "b"))


if __name__ == "__main__":
    unittest.main()
