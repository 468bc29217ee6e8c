"""Batched simulation environments with a fixed-step RK4 integrator.

Environments advance a whole batch of independent rollouts at once; all
per-slot computations are elementwise, so slot ``j`` evolves identically
whether it is simulated alone or inside a larger batch.
"""
from __future__ import annotations

import numpy as np

from ..rng import RolloutStreams


def rk4_step(derivative, s: np.ndarray, a: np.ndarray, dt: float) -> np.ndarray:
    """Classical 4th-order Runge-Kutta step with the action held constant.

    Args:
        derivative: callable (state, action) -> state time derivative.
        s: state array, batched in the leading dimension.
        a: action array matching the batch of ``s``.
        dt: step size in seconds, > 0.

    Returns:
        The state after one step.  Raises on nonfinite output.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    k1 = derivative(s, a)
    k2 = derivative(s + 0.5 * dt * k1, a)
    k3 = derivative(s + 0.5 * dt * k2, a)
    k4 = derivative(s + dt * k3, a)
    out = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("nonfinite state after integration step")
    return out


class VecEnv:
    """Base class for batched fixed-horizon environments.

    Subclasses implement ``sample_init``, ``reward`` and either
    ``derivative`` (integrated with RK4) or ``step_state`` directly.
    ``step`` returns the reward of the state-action pair *before* the
    transition, matching r_t = r(s_t, a_t); ``done`` flips to True once
    ``horizon`` steps have been taken.
    """

    state_dim: int
    action_dim: int

    def __init__(self, batch: int, horizon: int, dt: float):
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        self.batch = batch
        self.horizon = horizon
        self.dt = dt
        self._state: np.ndarray | None = None
        self._t = 0

    # -- to be provided by concrete systems --------------------------------

    def sample_init(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def reward(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def step_state(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        return rk4_step(self.derivative, s, a, self.dt)

    # -- rollout interface ---------------------------------------------------

    def reset(self, streams: RolloutStreams) -> np.ndarray:
        if streams.batch != self.batch:
            raise ValueError(f"need {self.batch} stream slots, got {streams.batch}")
        self._state = np.stack([self.sample_init(r) for r in streams.init])
        self._t = 0
        return self._state.copy()

    def step(self, actions: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
        if self._state is None:
            raise RuntimeError("step() before reset()")
        actions = np.asarray(actions, dtype=float)
        if actions.shape != (self.batch, self.action_dim):
            raise ValueError(f"expected actions of shape {(self.batch, self.action_dim)}, got {actions.shape}")
        r = self.reward(self._state, actions)
        self._state = self.step_state(self._state, actions)
        self._t += 1
        return self._state.copy(), r, self._t >= self.horizon

    @property
    def state(self) -> np.ndarray:
        """Noiseless internal state (wrappers may return perturbed observations)."""
        return self._state

    def unwrapped(self) -> "VecEnv":
        return self


class VecEnvWrapper(VecEnv):
    """Pass-through wrapper; subclasses override reset/step selectively."""

    def __init__(self, env: VecEnv):
        super().__init__(env.batch, env.horizon, env.dt)
        self.env = env
        self.state_dim = env.state_dim
        self.action_dim = env.action_dim

    def reset(self, streams: RolloutStreams) -> np.ndarray:
        self._t = 0
        return self.env.reset(streams)

    def step(self, actions: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
        self._t += 1
        return self.env.step(actions)

    @property
    def state(self) -> np.ndarray:
        return self.env.state

    def unwrapped(self) -> VecEnv:
        return self.env.unwrapped()


class SingleEnv:
    """Scalar step/reset adapter over a batch-1 environment stack."""

    def __init__(self, env: VecEnv):
        if env.batch != 1:
            raise ValueError("SingleEnv requires a batch-1 environment")
        self.env = env
        self.state_dim = env.state_dim
        self.action_dim = env.action_dim
        self.horizon = env.horizon
        self.dt = env.dt

    def reset(self, streams: RolloutStreams) -> np.ndarray:
        return self.env.reset(streams)[0]

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, bool]:
        obs, r, done = self.env.step(np.asarray(action, dtype=float)[None, :])
        return obs[0], float(r[0]), done
