"""Feedforward tanh policy over a flat parameter vector.

The network is state_dim -> 16 -> 16 -> action_dim with tanh hidden
activations and a linear output head.  The flat vector appends one log-std
per action dimension for the diagonal-Gaussian exploration noise, so the
total length is (state_dim+1)*16 + 17*16 + 17*action_dim + action_dim.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PolicyArch:
    state_dim: int
    action_dim: int
    hidden: tuple[int, int] = (16, 16)

    @property
    def n_params(self) -> int:
        h1, h2 = self.hidden
        return ((self.state_dim + 1) * h1 + (h1 + 1) * h2
                + (h2 + 1) * self.action_dim + self.action_dim)

    def layout(self) -> list[tuple[str, tuple[int, ...]]]:
        h1, h2 = self.hidden
        return [
            ("W1", (self.state_dim, h1)), ("b1", (h1,)),
            ("W2", (h1, h2)), ("b2", (h2,)),
            ("W3", (h2, self.action_dim)), ("b3", (self.action_dim,)),
            ("log_std", (self.action_dim,)),
        ]


def init_policy_params(arch: PolicyArch, rng: np.random.Generator,
                       weight_scale: float = 1.0, log_std_init: float = -1.0) -> np.ndarray:
    """Random initial parameters: scaled 1/sqrt(fan_in) weights, zero biases."""
    chunks = []
    for name, shape in arch.layout():
        if name.startswith("W"):
            fan_in = shape[0]
            chunks.append(rng.normal(0.0, weight_scale / np.sqrt(fan_in), size=shape).ravel())
        elif name == "log_std":
            chunks.append(np.full(shape, log_std_init))
        else:
            chunks.append(np.zeros(shape))
    theta = np.concatenate(chunks)
    assert theta.size == arch.n_params
    return theta


def unflatten(arch: PolicyArch, theta: np.ndarray) -> dict[str, np.ndarray]:
    """Views into a flat vector (or a (B, n_params) stack) as named arrays.

    For a stacked input every view keeps the leading batch axis.
    """
    theta = np.asarray(theta, dtype=float)
    stacked = theta.ndim == 2
    if theta.shape[-1] != arch.n_params:
        raise ValueError(f"expected {arch.n_params} parameters, got {theta.shape[-1]}")
    views = {}
    offset = 0
    for name, shape in arch.layout():
        size = int(np.prod(shape))
        block = theta[..., offset:offset + size]
        views[name] = block.reshape(theta.shape[:-1] + shape) if stacked else block.reshape(shape)
        offset += size
    return views


def _stack_weights(views: dict[str, np.ndarray], batch: int) -> dict[str, np.ndarray]:
    """Broadcast single-policy views to a (batch, ...) stack without copying."""
    return {name: np.broadcast_to(v, (batch,) + v.shape) for name, v in views.items()}


def policy_mean_stacked(arch: PolicyArch, theta, obs: np.ndarray) -> np.ndarray:
    """Mean action for a batch of observations, one parameter set per slot.

    ``theta`` is a flat vector shared by all slots, or a (B, n_params)
    stack with one policy per slot.  A single einsum formulation is used
    for both, so results are bitwise independent of how rollouts are
    grouped into batches.
    """
    obs = np.asarray(obs, dtype=float)
    if obs.ndim != 2 or obs.shape[1] != arch.state_dim:
        raise ValueError(f"expected observations of shape (B, {arch.state_dim}), got {obs.shape}")
    batch = obs.shape[0]
    views = unflatten(arch, theta)
    if np.asarray(theta).ndim == 1:
        views = _stack_weights(views, batch)
    h1 = np.tanh(np.einsum("bi,bio->bo", obs, views["W1"]) + views["b1"])
    h2 = np.tanh(np.einsum("bi,bio->bo", h1, views["W2"]) + views["b2"])
    return np.einsum("bi,bio->bo", h2, views["W3"]) + views["b3"]


def policy_forward(arch: PolicyArch, theta: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Action distribution (mean, std) of one policy at state(s) ``s``.

    Evaluation-mode action selection uses the mean; the std only drives
    exploration sampling.
    """
    s = np.asarray(s, dtype=float)
    single = s.ndim == 1
    mean = policy_mean_stacked(arch, theta, s[None, :] if single else s)
    std = np.exp(unflatten(arch, theta)["log_std"])
    return (mean[0], std) if single else (mean, np.broadcast_to(std, mean.shape))


def reset_exploration(arch: PolicyArch, theta: np.ndarray, log_std_init: float = -1.0) -> np.ndarray:
    """Copy of ``theta`` with the exploration log-stds reset to their initial value."""
    out = np.array(theta, dtype=float, copy=True)
    out[-arch.action_dim:] = log_std_init
    return out
