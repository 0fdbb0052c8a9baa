"""Twin-delayed deterministic policy gradient on numpy MLPs."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from hev_energy_lab.errors import DimensionError, TrainingDivergedError
from hev_energy_lab.mlcore.backprop import EXTERNAL, SQUARED_ERROR, backprop, squared_error
from hev_energy_lab.mlcore.mlp import MlpWeights, init_mlp, mlp_backward, mlp_forward
from hev_energy_lab.mlcore.optim import Adam
from hev_energy_lab.rlagent.replay import Batch

LOGGER = logging.getLogger(__name__)


class Hyperparameters(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    gamma: float = Field(default=0.995, gt=0.0, lt=1.0)
    buffer_size: int = Field(default=1_000_000, ge=1)
    explore_sigma: float = Field(default=0.1, ge=0.0)
    explore_decay: float = Field(default=0.99, gt=0.0, le=1.0)
    explore_floor: float = Field(default=0.001, ge=0.0)
    batch_size: int = Field(default=256, ge=1)
    policy_delay: int = Field(default=4, ge=1)
    target_noise: float = Field(default=0.2, ge=0.0)
    noise_clip: float = Field(default=0.5, ge=0.0)
    soft_rate: float = Field(default=0.005, ge=0.0, le=1.0)
    actor_lr: float = Field(default=1e-4, gt=0.0)
    critic_lr: float = Field(default=1e-4, gt=0.0)
    episodes: int = Field(default=50, ge=0)
    hidden_sizes: tuple[int, ...] = (64, 64)

    @model_validator(mode="after")
    def _check_batch(self) -> "Hyperparameters":
        if self.batch_size > self.buffer_size:
            raise ValueError("batch_size cannot exceed buffer_size")
        return self

    def exploration_sigma(self, episode: int) -> float:
        return max(self.explore_sigma * self.explore_decay**episode, self.explore_floor)


@dataclass
class AgentNetworks:
    actor: MlpWeights
    actor_target: MlpWeights
    critic1: MlpWeights
    critic2: MlpWeights
    critic1_target: MlpWeights
    critic2_target: MlpWeights
    actor_opt: Adam
    critic1_opt: Adam
    critic2_opt: Adam
    seed: int
    update_count: int = 0

    @property
    def state_dim(self) -> int:
        return self.actor.sizes[0]


@dataclass(frozen=True)
class UpdateDiagnostics:
    critic1_loss: float
    critic2_loss: float
    actor_loss: float | None
    mean_target: float


def create_agent(state_dim: int, hp: Hyperparameters, seed: int, action_dim: int = 1) -> AgentNetworks:
    rng = np.random.default_rng(seed)
    hidden = tuple(hp.hidden_sizes)
    relus = ("relu",) * len(hidden)
    actor = init_mlp((state_dim, *hidden, action_dim), (*relus, "tanh"), rng)
    critic1 = init_mlp((state_dim + action_dim, *hidden, 1), (*relus, "linear"), rng)
    critic2 = init_mlp((state_dim + action_dim, *hidden, 1), (*relus, "linear"), rng)
    return AgentNetworks(
        actor=actor,
        actor_target=actor.copy(),
        critic1=critic1,
        critic2=critic2,
        critic1_target=critic1.copy(),
        critic2_target=critic2.copy(),
        actor_opt=Adam(lr=hp.actor_lr),
        critic1_opt=Adam(lr=hp.critic_lr),
        critic2_opt=Adam(lr=hp.critic_lr),
        seed=seed,
    )


def act(actor: MlpWeights, state: np.ndarray) -> np.ndarray:
    output, _ = mlp_forward(np.atleast_2d(state), actor)
    return output


def q_value(critic: MlpWeights, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    output, _ = mlp_forward(np.hstack((states, actions)), critic)
    return output[:, 0]


def compute_td_targets(
    rewards: np.ndarray, dones: np.ndarray, q1_next: np.ndarray, q2_next: np.ndarray, gamma: float
) -> np.ndarray:
    """``r + gamma * (1 - done) * min(Q1', Q2')``."""

    return rewards + gamma * (1.0 - dones) * np.minimum(q1_next, q2_next)


def soft_update(target: MlpWeights, source: MlpWeights, rate: float) -> MlpWeights:
    if target.params.keys() != source.params.keys():
        raise DimensionError("target and source networks have different layers")
    params = {}
    for name, value in target.params.items():
        if value.shape != source.params[name].shape:
            raise DimensionError(f"{name}: target {value.shape} vs source {source.params[name].shape}")
        params[name] = rate * source.params[name] + (1.0 - rate) * value
    return MlpWeights(params, target.activations)


def smoothed_target_actions(
    actor_target: MlpWeights, next_states: np.ndarray, hp: Hyperparameters, rng: np.random.Generator
) -> np.ndarray:
    actions = act(actor_target, next_states)
    noise = np.clip(rng.normal(0.0, hp.target_noise, size=actions.shape), -hp.noise_clip, hp.noise_clip)
    return np.clip(actions + noise, -1.0, 1.0)


def _critic_step(critic: MlpWeights, optimizer: Adam, inputs: np.ndarray, targets: np.ndarray) -> tuple[MlpWeights, float]:
    output, cache = mlp_forward(inputs, critic)
    loss = squared_error(output[:, 0], targets)
    grads, _ = backprop(SQUARED_ERROR, cache, critic, target=targets.reshape(-1, 1))
    return MlpWeights(optimizer.step(critic.params, grads), critic.activations), loss


def td3_update(nets: AgentNetworks, batch: Batch, hp: Hyperparameters, rng: np.random.Generator) -> UpdateDiagnostics:
    """One critic regression step; every ``policy_delay`` calls also the actor and targets."""

    next_actions = smoothed_target_actions(nets.actor_target, batch.next_states, hp, rng)
    targets = compute_td_targets(
        batch.rewards,
        batch.dones,
        q_value(nets.critic1_target, batch.next_states, next_actions),
        q_value(nets.critic2_target, batch.next_states, next_actions),
        hp.gamma,
    )
    inputs = np.hstack((batch.states, batch.actions))
    nets.critic1, loss1 = _critic_step(nets.critic1, nets.critic1_opt, inputs, targets)
    nets.critic2, loss2 = _critic_step(nets.critic2, nets.critic2_opt, inputs, targets)
    if not (np.isfinite(loss1) and np.isfinite(loss2)):
        raise TrainingDivergedError("critic loss is not finite", nets.seed, hp.critic_lr)

    nets.update_count += 1
    actor_loss = None
    if nets.update_count % hp.policy_delay == 0:
        actions, actor_cache = mlp_forward(batch.states, nets.actor)
        q, critic_cache = mlp_forward(np.hstack((batch.states, actions)), nets.critic1)
        actor_loss = -float(np.mean(q))
        if not np.isfinite(actor_loss):
            raise TrainingDivergedError("actor objective is not finite", nets.seed, hp.actor_lr)
        _, d_inputs = mlp_backward(np.full_like(q, -1.0 / q.shape[0]), critic_cache, nets.critic1)
        d_actions = d_inputs[:, batch.states.shape[1]:]
        grads, _ = backprop(EXTERNAL, actor_cache, nets.actor, grad_output=d_actions)
        nets.actor = MlpWeights(nets.actor_opt.step(nets.actor.params, grads), nets.actor.activations)
        nets.actor_target = soft_update(nets.actor_target, nets.actor, hp.soft_rate)
        nets.critic1_target = soft_update(nets.critic1_target, nets.critic1, hp.soft_rate)
        nets.critic2_target = soft_update(nets.critic2_target, nets.critic2, hp.soft_rate)
    return UpdateDiagnostics(
        critic1_loss=loss1, critic2_loss=loss2, actor_loss=actor_loss, mean_target=float(np.mean(targets))
    )
