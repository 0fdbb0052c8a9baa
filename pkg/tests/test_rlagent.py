"""tests for the TD3 agent, replay buffer and environment wrappers."""

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

from hev_energy_lab.constants import TERMINAL_REWARD, EnvTag  # noqa: E402
from hev_energy_lab.cycle.drive_cycle import cycle_from_speeds  # noqa: E402
from hev_energy_lab.errors import DimensionError, ModelStateError  # noqa: E402
from hev_energy_lab.powertrain.plant import build_plant  # noqa: E402
from hev_energy_lab.rlagent.env import (  # noqa: E402
    CONVENTIONAL_STATE_DIM,
    RLECMS_STATE_DIM,
    action_to_ef,
    action_to_engine_power,
    reward,
)
from hev_energy_lab.rlagent.replay import Batch, Experience, ReplayBuffer  # noqa: E402
from hev_energy_lab.rlagent.td3 import (  # noqa: E402
    Hyperparameters,
    compute_td_targets,
    create_agent,
    soft_update,
    td3_update,
)
from hev_energy_lab.rlagent.trainer import (  # noqa: E402
    engine_power_fluctuation,
    evaluate_policy,
    load_policy,
    make_env,
    save_policy,
    train,
)

SMALL_HP = Hyperparameters(
    episodes=2,
    buffer_size=200,
    batch_size=8,
    hidden_sizes=(8, 8),
    policy_delay=2,
)


def _short_cycle():
    return cycle_from_speeds("short", np.concatenate((np.linspace(0.0, 12.0, 8), np.full(8, 12.0), np.linspace(12.0, 0.0, 6))))


class TestRewardAndActions(unittest.TestCase):
    def test_surplus_is_not_penalized(self) -> None:
        self.assertAlmostEqual(reward(1.0e-3, 0.01, 3.0), -1.0e-3)

    def test_deficit_is_penalized_quadratically(self) -> None:
        self.assertAlmostEqual(reward(1.0e-3, -0.01, 3.0), -(1.0e-3 + 3.0 * 1.0e-4))

    def test_action_maps_onto_equivalence_factor_range(self) -> None:
        self.assertAlmostEqual(action_to_ef(-1.0), 0.5)
        self.assertAlmostEqual(action_to_ef(0.0), 1.25)
        self.assertAlmostEqual(action_to_ef(1.0), 2.0)
        self.assertAlmostEqual(action_to_ef(5.0), 2.0)

    def test_negative_action_means_engine_off(self) -> None:
        self.assertEqual(action_to_engine_power(-0.5), 0.0)
        self.assertAlmostEqual(action_to_engine_power(0.5, 100.0e3), 50.0e3)


class TestReplayBuffer(unittest.TestCase):
    def _experience(self, value: float) -> Experience:
        return Experience(np.full(2, value), np.array([value]), value, np.full(2, value + 1.0), False)

    def test_oldest_entries_are_overwritten(self) -> None:
        buffer = ReplayBuffer(3, state_dim=2)
        for value in range(5):
            buffer.push(self._experience(float(value)))

        rewards = [item.reward for item in buffer.contents()]

        self.assertEqual(len(buffer), 3)
        self.assertEqual(rewards, [2.0, 3.0, 4.0])

    def test_empty_buffer_cannot_be_sampled(self) -> None:
        with self.assertRaises(ModelStateError):
            ReplayBuffer(4, state_dim=2).sample(1, np.random.default_rng(0))

    def test_wrong_state_shape_is_rejected(self) -> None:
        with self.assertRaises(DimensionError):
            ReplayBuffer(4, state_dim=3).push(self._experience(1.0))

    def test_sample_draws_stored_rows(self) -> None:
        buffer = ReplayBuffer(10, state_dim=2)
        for value in range(4):
            buffer.push(self._experience(float(value)))

        batch = buffer.sample(16, np.random.default_rng(1))

        self.assertEqual(len(batch), 16)
        self.assertTrue(set(batch.rewards.tolist()) <= {0.0, 1.0, 2.0, 3.0})


class TestTd3Pieces(unittest.TestCase):
    def test_zero_discount_targets_equal_rewards(self) -> None:
        rewards = np.array([-1.0, -2.0])

        targets = compute_td_targets(rewards, np.zeros(2), np.array([5.0, 5.0]), np.array([3.0, 4.0]), 0.0)

        np.testing.assert_allclose(targets, rewards)

    def test_targets_use_the_smaller_critic_and_stop_at_done(self) -> None:
        targets = compute_td_targets(
            np.array([1.0, 1.0]), np.array([0.0, 1.0]), np.array([2.0, 2.0]), np.array([4.0, 4.0]), 0.5
        )

        np.testing.assert_allclose(targets, [2.0, 1.0])

    def test_soft_update_blends_parameters(self) -> None:
        nets = create_agent(3, SMALL_HP, seed=0)
        other = create_agent(3, SMALL_HP, seed=1)

        copied = soft_update(nets.actor, other.actor, 1.0)
        kept = soft_update(nets.actor, other.actor, 0.0)

        for name in nets.actor.params:
            np.testing.assert_array_equal(copied.params[name], other.actor.params[name])
            np.testing.assert_array_equal(kept.params[name], nets.actor.params[name])

    def test_soft_update_rejects_mismatched_networks(self) -> None:
        small = create_agent(3, SMALL_HP, seed=0)
        wide = create_agent(4, SMALL_HP, seed=0)

        with self.assertRaises(DimensionError):
            soft_update(small.actor, wide.actor, 0.5)

    def test_actor_moves_only_on_delayed_updates(self) -> None:
        rng = np.random.default_rng(3)
        nets = create_agent(3, SMALL_HP, seed=3)
        batch = Batch(
            states=rng.normal(size=(8, 3)),
            actions=rng.uniform(-1.0, 1.0, size=(8, 1)),
            rewards=rng.normal(size=8),
            next_states=rng.normal(size=(8, 3)),
            dones=np.zeros(8),
        )
        before = nets.actor.copy()

        first = td3_update(nets, batch, SMALL_HP, rng)
        unchanged = all(np.array_equal(nets.actor.params[k], before.params[k]) for k in before.params)
        second = td3_update(nets, batch, SMALL_HP, rng)

        self.assertIsNone(first.actor_loss)
        self.assertTrue(unchanged)
        self.assertIsNotNone(second.actor_loss)
        self.assertEqual(nets.update_count, 2)

    def test_exploration_noise_decays_to_floor(self) -> None:
        hp = Hyperparameters()

        self.assertAlmostEqual(hp.exploration_sigma(0), 0.1)
        self.assertAlmostEqual(hp.exploration_sigma(10), 0.1 * 0.99**10)
        self.assertEqual(hp.exploration_sigma(10_000), 0.001)

    def test_batch_larger_than_buffer_is_rejected(self) -> None:
        with self.assertRaises(ValueError):
            Hyperparameters(buffer_size=10, batch_size=20)


class TestTraining(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.plant = build_plant(flat_battery=True)
        cls.cycle = _short_cycle()

    def test_state_dimensions_per_environment(self) -> None:
        rl_ecms = make_env(EnvTag.RL_ECMS, self.cycle, self.plant)
        conventional = make_env(EnvTag.CONVENTIONAL, self.cycle, self.plant)

        self.assertEqual(rl_ecms.reset().shape, (RLECMS_STATE_DIM,))
        self.assertEqual(conventional.reset().shape, (CONVENTIONAL_STATE_DIM,))

    def test_same_seed_reproduces_returns(self) -> None:
        first = train(make_env(EnvTag.RL_ECMS, self.cycle, self.plant), SMALL_HP, seed=5)
        second = train(make_env(EnvTag.RL_ECMS, self.cycle, self.plant), SMALL_HP, seed=5)

        self.assertEqual(len(first.curve), 2)
        np.testing.assert_array_equal(first.returns(), second.returns())

    def test_rewards_are_bounded_by_terminal_penalty(self) -> None:
        result = train(make_env(EnvTag.CONVENTIONAL, self.cycle, self.plant), SMALL_HP, seed=2)

        self.assertTrue(np.all(result.returns() <= 0.0))
        self.assertTrue(np.all(result.returns() >= TERMINAL_REWARD * len(self.cycle)))

    def test_saved_policy_evaluates_like_the_trained_one(self) -> None:
        result = train(make_env(EnvTag.RL_ECMS, self.cycle, self.plant), SMALL_HP, seed=4)

        with tempfile.TemporaryDirectory() as tmp_dir:
            path = save_policy(Path(tmp_dir) / "policy.json", result)
            actor, tag = load_policy(path)

        original = evaluate_policy(result.policy, make_env(EnvTag.RL_ECMS, self.cycle, self.plant))
        reloaded = evaluate_policy(actor, make_env(tag, self.cycle, self.plant))
        self.assertEqual(tag, EnvTag.RL_ECMS)
        self.assertEqual(original, reloaded)
        self.assertGreaterEqual(reloaded.fuel_l, 0.0)

    def test_engine_power_fluctuation_ignores_engine_off(self) -> None:
        self.assertAlmostEqual(engine_power_fluctuation(np.array([0.0, 10.0, 30.0])), 50.0)
        self.assertEqual(engine_power_fluctuation(np.zeros(4)), 0.0)


if __name__ == "__main__":
    unittest.main()
