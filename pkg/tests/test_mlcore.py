"""tests for the numpy network core: forward passes, gradients and the optimizer."""

from __future__ import annotations

import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

PROJECT_ROOT = Path(__file__).resolve().parents[1]
SRC_PATH = PROJECT_ROOT / "src"
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

from hev_energy_lab.errors import DimensionError, ModelStateError  # noqa: E402
from hev_energy_lab.mlcore import (  # noqa: E402
    EXTERNAL,
    SQUARED_ERROR,
    Adam,
    LstmWeights,
    MlpWeights,
    RnnWeights,
    StandardScaler,
    backprop,
    finite_difference_check,
    init_lstm,
    init_mlp,
    init_rnn,
    load_weights,
    lstm_sequence_forward,
    mlp_forward,
    rnn_sequence_forward,
    save_weights,
    squared_error,
)
from hev_energy_lab.mlcore.lstm import lstm_shapes  # noqa: E402


def _lstm_loss(xs: np.ndarray, target: np.ndarray, input_dim: int, hidden_dim: int):
    def loss(params: dict[str, np.ndarray]) -> float:
        y, _ = lstm_sequence_forward(xs, LstmWeights(params, input_dim, hidden_dim))
        return squared_error(y, target)

    return loss


class TestLstm(unittest.TestCase):
    def test_zero_weights_give_zero_output(self) -> None:
        params = {name: np.zeros(shape) for name, shape in lstm_shapes(3, 4).items()}
        xs = np.ones((2, 5, 3))

        y, _ = lstm_sequence_forward(xs, LstmWeights(params, 3, 4))

        np.testing.assert_allclose(y, np.zeros((2, 1)))

    def test_missing_parameter_is_a_dimension_error(self) -> None:
        params = {name: np.zeros(shape) for name, shape in lstm_shapes(3, 4).items()}
        del params["W_y"]

        with self.assertRaises(DimensionError):
            LstmWeights(params, 3, 4)

    def test_analytic_gradient_matches_finite_differences(self) -> None:
        rng = np.random.default_rng(7)
        weights = init_lstm(3, 4, rng)
        xs = rng.normal(size=(4, 6, 3))
        target = rng.normal(size=(4, 1)) + 2.0

        y, cache = lstm_sequence_forward(xs, weights)
        grads, _ = backprop(SQUARED_ERROR, cache, weights, target=target)
        report = finite_difference_check(_lstm_loss(xs, target, 3, 4), weights.params, grads, eps=1e-5, max_params=150)

        self.assertTrue(report.passed(1e-4), report)

    def test_corrupted_gradient_is_detected(self) -> None:
        rng = np.random.default_rng(7)
        weights = init_lstm(2, 2, rng)
        xs = rng.normal(size=(3, 4, 2))
        target = np.full((3, 1), 1.5)

        _, cache = lstm_sequence_forward(xs, weights)
        grads, _ = backprop(SQUARED_ERROR, cache, weights, target=target)
        grads["b_y"] = grads["b_y"] + 0.1
        report = finite_difference_check(_lstm_loss(xs, target, 2, 2), weights.params, grads, max_params=1000)

        self.assertFalse(report.passed(1e-4))


class TestRnn(unittest.TestCase):
    def test_analytic_gradient_matches_finite_differences(self) -> None:
        rng = np.random.default_rng(3)
        weights = init_rnn(3, 5, rng)
        xs = rng.normal(size=(4, 5, 3))
        target = np.full((4, 1), 1.0)

        def loss(params: dict[str, np.ndarray]) -> float:
            y, _ = rnn_sequence_forward(xs, RnnWeights(params, 3, 5))
            return squared_error(y, target)

        _, cache = rnn_sequence_forward(xs, weights)
        grads, _ = backprop(SQUARED_ERROR, cache, weights, target=target)

        self.assertTrue(finite_difference_check(loss, weights.params, grads).passed(1e-4))


class TestMlp(unittest.TestCase):
    def test_tanh_network_gradient(self) -> None:
        rng = np.random.default_rng(11)
        weights = init_mlp((4, 8, 1), ("tanh", "linear"), rng)
        x = rng.normal(size=(6, 4))
        target = rng.normal(size=(6, 1))

        def loss(params: dict[str, np.ndarray]) -> float:
            y, _ = mlp_forward(x, MlpWeights(params, weights.activations))
            return squared_error(y, target)

        _, cache = mlp_forward(x, weights)
        grads, _ = backprop(SQUARED_ERROR, cache, weights, target=target)

        self.assertTrue(finite_difference_check(loss, weights.params, grads).passed(1e-4))

    def test_external_gradient_reaches_the_input(self) -> None:
        rng = np.random.default_rng(5)
        weights = init_mlp((2, 1), ("linear",), rng)
        x = np.array([[0.3, -0.2]])

        _, cache = mlp_forward(x, weights)
        _, grad_input = backprop(EXTERNAL, cache, weights, grad_output=np.ones((1, 1)))

        np.testing.assert_allclose(grad_input[0], weights.params["W0"][:, 0])

    def test_wrong_input_width_is_rejected(self) -> None:
        weights = init_mlp((3, 2, 1), ("relu", "linear"), np.random.default_rng(0))

        with self.assertRaises(DimensionError):
            mlp_forward(np.ones((1, 4)), weights)

    def test_backprop_without_cache_fails(self) -> None:
        weights = init_mlp((3, 1), ("linear",), np.random.default_rng(0))

        with self.assertRaises(ModelStateError):
            backprop(SQUARED_ERROR, None, weights, target=np.zeros((1, 1)))


class TestAdamAndPersistence(unittest.TestCase):
    def test_first_step_moves_each_parameter_by_learning_rate(self) -> None:
        params = {"w": np.array([1.0, -2.0, 0.5])}
        grads = {"w": np.array([0.3, -4.0, 1e-2])}

        updated = Adam(lr=1e-3).step(params, grads)

        np.testing.assert_allclose(params["w"] - updated["w"], 1e-3 * np.sign(grads["w"]), rtol=1e-4)

    def test_weights_survive_a_save_and_load(self) -> None:
        weights = init_mlp((3, 4, 1), ("tanh", "linear"), np.random.default_rng(2))

        with tempfile.TemporaryDirectory() as tmp_dir:
            path = save_weights(Path(tmp_dir) / "actor.json", "mlp", {"sizes": [3, 4, 1]}, 2, weights.params)
            loaded = load_weights(path)

        self.assertEqual(loaded.seed, 2)
        for name, value in loaded.arrays().items():
            np.testing.assert_array_equal(value, weights.params[name])

    def test_scaler_keeps_constant_columns_at_unit_scale(self) -> None:
        values = np.column_stack((np.arange(5.0), np.full(5, 3.0)))

        scaler = StandardScaler.fit(values)

        self.assertEqual(scaler.std[1], 1.0)
        np.testing.assert_allclose(scaler.inverse(scaler.transform(values)), values)


if __name__ == "__main__":
    unittest.main()
