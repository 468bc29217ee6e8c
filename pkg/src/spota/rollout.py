"""Trajectories, batched episode execution, and return estimation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .envs.base import VecEnv
from .rng import RolloutStreams, rollout_streams

ActFn = Callable[[np.ndarray, int], np.ndarray]  # (obs batch, step index) -> actions


@dataclass
class Trajectory:
    """One recorded rollout; states, actions and rewards share their length."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    seed: tuple

    def __post_init__(self):
        if not (len(self.states) == len(self.actions) == len(self.rewards)):
            raise ValueError("states, actions and rewards must have equal length")


def discounted_return(traj: Trajectory, gamma: float) -> float:
    """Sum of gamma^t * r_t over the recorded steps."""
    rewards = np.asarray(traj.rewards, dtype=float)
    if rewards.size == 0:
        raise ValueError("empty trajectory")
    total = 0.0
    disc = 1.0
    for r in rewards:
        total += disc * float(r)
        disc *= gamma
    return total


def run_episodes(env: VecEnv, act_fn: ActFn, streams: RolloutStreams, gamma: float,
                 record: bool = False):
    """Run one full fixed-horizon episode per batch slot.

    Returns the per-slot discounted returns, plus the recorded
    (states, actions, rewards) arrays when ``record`` is set.  The states
    array carries horizon+1 entries (the terminal state included) to
    support value bootstrapping.
    """
    obs = env.reset(streams)
    batch = env.batch
    returns = np.zeros(batch)
    disc = 1.0
    states = actions = rewards = None
    if record:
        states = np.empty((env.horizon + 1, batch, env.state_dim))
        actions = np.empty((env.horizon, batch, env.action_dim))
        rewards = np.empty((env.horizon, batch))
    for t in range(env.horizon):
        a = act_fn(obs, t)
        if record:
            states[t] = obs
            actions[t] = a
        obs, r, done = env.step(a)
        returns += disc * r
        disc *= gamma
        if record:
            rewards[t] = r
    assert done
    if record:
        states[env.horizon] = obs
        return returns, states, actions, rewards
    return returns


def mean_policy_act_fn(arch, theta) -> ActFn:
    """Deterministic (evaluation-mode) action selection."""
    from .policy import policy_mean_stacked

    return lambda obs, t: policy_mean_stacked(arch, theta, obs)


def estimate_return(env_factory: Callable[..., VecEnv], xi, policy_act_fn: ActFn,
                    n_J: int, seed_base: int, gamma: float) -> float:
    """Mean discounted return over n_J rollouts with per-rollout seed paths.

    Rollout j draws its initial state and noise from streams addressed by
    (seed_base, j), so the estimate is a pure function of
    (xi, policy, n_J, seed_base): re-evaluating any policy under the same
    seed_base reuses identical initial states and noise realizations.
    """
    if n_J < 1:
        raise ValueError("n_J must be >= 1")
    env = env_factory(xi, batch=n_J)
    streams = rollout_streams([(seed_base, j) for j in range(n_J)])
    returns = run_episodes(env, policy_act_fn, streams, gamma)
    return float(np.mean(returns))


def rollout_single(env: VecEnv, act_fn: ActFn, seed_path: Sequence, gamma: float) -> Trajectory:
    """Record one trajectory from a batch-1 environment."""
    if env.batch != 1:
        raise ValueError("rollout_single needs a batch-1 environment")
    streams = rollout_streams([tuple(seed_path)])
    _, states, actions, rewards = run_episodes(env, act_fn, streams, gamma, record=True)
    return Trajectory(states=states[:-1, 0], actions=actions[:, 0], rewards=rewards[:, 0],
                      seed=tuple(seed_path))
