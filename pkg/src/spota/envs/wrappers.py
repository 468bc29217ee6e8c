"""Environment wrappers: action delay and observation noise."""
from __future__ import annotations

import numpy as np

from ..rng import RolloutStreams
from .base import VecEnv, VecEnvWrapper


class ActionDelayWrapper(VecEnvWrapper):
    """Applies at step t the action commanded at step t - delay.

    Before enough actions have been commanded, a configurable hold action
    (default: zero) is applied.  The buffer is a per-slot FIFO; each slot
    of the batch may carry its own integer delay.
    """

    def __init__(self, env: VecEnv, delay_steps, hold_action: np.ndarray | None = None):
        super().__init__(env)
        delay = np.broadcast_to(np.asarray(delay_steps, dtype=int), (env.batch,)).copy()
        if np.any(delay < 0):
            raise ValueError("delay_steps must be nonnegative")
        self.delay = delay
        self.capacity = int(delay.max()) + 1
        if hold_action is None:
            hold_action = np.zeros(env.action_dim)
        self.hold = np.broadcast_to(np.asarray(hold_action, dtype=float), (env.batch, env.action_dim)).copy()
        self._buffer: np.ndarray | None = None

    def reset(self, streams: RolloutStreams) -> np.ndarray:
        self._buffer = np.zeros((self.capacity, self.batch, self.action_dim))
        return super().reset(streams)

    def step(self, actions: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
        t = self._t
        self._buffer[t % self.capacity] = actions
        rows = (t - self.delay) % self.capacity
        delayed = self._buffer[rows, np.arange(self.batch)]
        applied = np.where((t >= self.delay)[:, None], delayed, self.hold)
        return super().step(applied)


class ObsNoiseWrapper(VecEnvWrapper):
    """Adds independent zero-mean Gaussian noise per observation dimension.

    Rewards stay computed from the noiseless state inside the wrapped
    environment; only the observation handed to the policy is perturbed.
    Noise for a whole episode is drawn from each slot's obs-noise stream at
    reset, so a rollout's noise depends only on its own seed path.
    """

    def __init__(self, env: VecEnv, stds):
        super().__init__(env)
        stds = np.asarray(stds, dtype=float)
        if stds.shape != (env.state_dim,):
            raise ValueError(f"need one std per state dimension, got shape {stds.shape}")
        if np.any(stds < 0):
            raise ValueError("noise stds must be nonnegative")
        self.stds = stds
        self._noise: np.ndarray | None = None

    def reset(self, streams: RolloutStreams) -> np.ndarray:
        obs = super().reset(streams)
        draws = [r.normal(size=(self.horizon + 1, self.state_dim)) for r in streams.obs_noise]
        self._noise = np.stack(draws) * self.stds
        return obs + self._noise[:, 0]

    def step(self, actions: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
        obs, r, done = super().step(actions)
        return obs + self._noise[:, self._t], r, done


def wrap_action_delay(env: VecEnv, delay_steps, hold_action=None) -> VecEnv:
    """Delay wrapper; ``delay_steps=0`` leaves the behavior bit-identical."""
    return ActionDelayWrapper(env, delay_steps, hold_action)


def wrap_obs_noise(env: VecEnv, stds) -> VecEnv:
    """Observation noise wrapper; all-zero ``stds`` is an identity wrapper."""
    return ObsNoiseWrapper(env, stds)
