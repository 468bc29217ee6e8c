"""Policy optimization subroutines: CEM, clipped-surrogate PG, EPOpt filter.

Both optimizers plug into the meta-algorithm through the same contract:
given a list of sampled domains and initial parameters, return improved
parameters plus a per-iteration trace.  The cross-entropy method is the
robust desk-scale default; the clipped-surrogate policy gradient with
generalized advantage estimation is the gradient-based alternative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .policy import PolicyArch, policy_mean_stacked, unflatten
from .rng import rollout_streams, stream
from .rollout import run_episodes

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class PolOptSpec:
    """Hyper-parameters of the policy-optimization subroutine."""

    method: str = "cem"  # cem | clipped-pg | exact (analytic tasks only)
    iterations: int = 20
    n_tau: int = 10  # rollouts per sampled domain
    gamma: float = 0.999
    lam: float = 0.95  # advantage-estimation mixing
    learning_rate: float = 1e-4
    clip_ratio: float = 0.2
    epochs: int = 10  # gradient steps per clipped-pg iteration
    value_lr: float = 1e-3
    population: int = 40
    elite: int = 10
    init_std: float = 0.5  # CEM sampling std over parameters
    min_std: float = 0.0  # CEM std floor
    log_std_init: float = -1.0  # initial exploration log-std
    weight_scale: float = 1.0  # random-init weight scale
    cvar_epsilon: float | None = None  # EPOpt: train on the worst eps fraction

    def __post_init__(self):
        if self.method not in ("cem", "clipped-pg", "exact"):
            raise ValueError(f"unknown polopt method {self.method!r}")
        if not 0.0 <= self.gamma <= 1.0 or not 0.0 <= self.lam <= 1.0:
            raise ValueError("gamma and lam must lie in [0, 1]")
        if self.cvar_epsilon is not None and not 0.0 < self.cvar_epsilon <= 1.0:
            raise ValueError("cvar_epsilon must lie in (0, 1]")
        if self.population < self.elite or self.elite < 1:
            raise ValueError("need population >= elite >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def epopt_filter(per_trajectory_returns, epsilon: float) -> np.ndarray:
    """Indices of the worst ceil(epsilon * N) trajectories by return.

    Ties break toward the lower index; the result is sorted ascending.
    """
    returns = np.asarray(per_trajectory_returns, dtype=float)
    if returns.size == 0:
        raise ValueError("empty batch")
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    m = math.ceil(epsilon * returns.size)
    order = np.argsort(returns, kind="stable")
    return np.sort(order[:m])


def gae_advantages(rewards: np.ndarray, values: np.ndarray, gamma: float, lam: float) -> np.ndarray:
    """Exponentially-weighted TD advantages.

    Args:
        rewards: (..., T) per-step rewards.
        values: (..., T+1) value estimates, terminal state included.
        gamma, lam: discount and mixing coefficients in [0, 1].

    Returns:
        (..., T) advantages; lam=0 gives one-step TD errors, lam=1 gives
        the discounted return-to-go (bootstrapped by values[..., -1])
        minus the value baseline.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    T = rewards.shape[-1]
    if values.shape[-1] != T + 1:
        raise ValueError("values must cover one more step than rewards")
    deltas = rewards + gamma * values[..., 1:] - values[..., :-1]
    adv = np.zeros_like(rewards)
    acc = np.zeros_like(rewards[..., 0])
    for t in range(T - 1, -1, -1):
        acc = deltas[..., t] + gamma * lam * acc
        adv[..., t] = acc
    return adv


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    """Zero-mean, unit-std rescaling (identity for near-constant input)."""
    std = adv.std()
    if std < 1e-12:
        return adv - adv.mean()
    return (adv - adv.mean()) / std


# -- cross-entropy method ----------------------------------------------------


@dataclass
class CemResult:
    params: np.ndarray
    objective: float
    trace: list[tuple[int, float, float]] = field(default_factory=list)  # (iter, mean, std)


def cem_maximize(objective: Callable[[np.ndarray], np.ndarray], x0: np.ndarray,
                 sigma0: float, iterations: int, population: int, elite: int,
                 rng: np.random.Generator, min_std: float = 0.0) -> CemResult:
    """Diagonal-Gaussian cross-entropy search over a parameter vector.

    Each iteration evaluates ``population`` candidates (the current mean is
    always one of them) and refits mean and std to the ``elite`` best.  The
    best candidate ever evaluated is tracked and returned, so the result's
    objective is nondecreasing across iterations by construction.
    """
    x0 = np.asarray(x0, dtype=float)
    mean = x0.copy()
    std = np.full_like(mean, float(sigma0))
    best_x, best_f = None, -np.inf
    trace = []
    for it in range(iterations):
        perturbed = mean + std * rng.normal(size=(population - 1, mean.size))
        candidates = np.vstack([mean[None, :], perturbed])
        fitness = np.asarray(objective(candidates), dtype=float)
        order = np.argsort(-fitness, kind="stable")
        elites = candidates[order[:elite]]
        if fitness[order[0]] > best_f:
            best_f = float(fitness[order[0]])
            best_x = candidates[order[0]].copy()
        mean = elites.mean(axis=0)
        std = np.maximum(elites.std(axis=0), min_std)
        trace.append((it, float(fitness.mean()), float(fitness.std())))
    return CemResult(params=best_x, objective=best_f, trace=trace)


def _member_fitness(returns: np.ndarray, population: int, per_member: int,
                    cvar_epsilon: float | None) -> np.ndarray:
    per = returns.reshape(population, per_member)
    if cvar_epsilon is None:
        return per.mean(axis=1)
    worst = np.sort(per, axis=1)[:, : math.ceil(cvar_epsilon * per_member)]
    return worst.mean(axis=1)


def pol_opt_cem(spec: PolOptSpec, env_family, arch: PolicyArch,
                domains: Sequence, init_theta: np.ndarray, seed: int):
    """Cross-entropy policy search over the fixed set of sampled domains.

    The evaluation rollout seeds depend only on (seed, domain, rollout), so
    every population member in every iteration is scored on identical
    initial states and noise: the fitness is a deterministic function and
    CEM reduces to derivative-free maximization of it.
    """
    n = len(domains)
    per_member = n * spec.n_tau
    env = env_family.make_many(list(domains) * spec.population, repeats=spec.n_tau)
    slot_paths = [(seed, "cem-eval", i, r)
                  for _ in range(spec.population) for i in range(n) for r in range(spec.n_tau)]
    streams = rollout_streams(slot_paths)

    def objective(candidates: np.ndarray) -> np.ndarray:
        theta_stack = np.repeat(candidates, per_member, axis=0)
        returns = run_episodes(env, lambda obs, t: policy_mean_stacked(arch, theta_stack, obs),
                               streams, spec.gamma)
        return _member_fitness(returns, candidates.shape[0], per_member, spec.cvar_epsilon)

    result = cem_maximize(objective, init_theta, spec.init_std, spec.iterations,
                          spec.population, spec.elite, stream(seed, "cem-sample"),
                          min_std=spec.min_std)
    return result.params, result.trace


# -- clipped-surrogate policy gradient ----------------------------------------


@dataclass(frozen=True)
class MlpShape:
    """Weight layout of a plain two-hidden-layer tanh MLP (no log-std tail)."""

    in_dim: int
    out_dim: int
    hidden: tuple[int, int] = (16, 16)

    @property
    def n_params(self) -> int:
        h1, h2 = self.hidden
        return (self.in_dim + 1) * h1 + (h1 + 1) * h2 + (h2 + 1) * self.out_dim

    def split(self, w: np.ndarray):
        h1, h2 = self.hidden
        sizes = [self.in_dim * h1, h1, h1 * h2, h2, h2 * self.out_dim, self.out_dim]
        parts = np.split(np.asarray(w, dtype=float), np.cumsum(sizes)[:-1])
        return (parts[0].reshape(self.in_dim, h1), parts[1],
                parts[2].reshape(h1, h2), parts[3],
                parts[4].reshape(h2, self.out_dim), parts[5])


def mlp_forward(shape: MlpShape, w: np.ndarray, x: np.ndarray):
    """Forward pass returning the output and the activation cache."""
    W1, b1, W2, b2, W3, b3 = shape.split(w)
    h1 = np.tanh(x @ W1 + b1)
    h2 = np.tanh(h1 @ W2 + b2)
    out = h2 @ W3 + b3
    return out, (x, h1, h2)


def mlp_backward(shape: MlpShape, w: np.ndarray, cache, dout: np.ndarray) -> np.ndarray:
    """Gradient of sum(dout * out) with respect to the flat weights."""
    W1, b1, W2, b2, W3, b3 = shape.split(w)
    x, h1, h2 = cache
    dW3 = h2.T @ dout
    db3 = dout.sum(axis=0)
    dh2 = dout @ W3.T
    dz2 = dh2 * (1.0 - h2 * h2)
    dW2 = h1.T @ dz2
    db2 = dz2.sum(axis=0)
    dh1 = dz2 @ W2.T
    dz1 = dh1 * (1.0 - h1 * h1)
    dW1 = x.T @ dz1
    db1 = dz1.sum(axis=0)
    return np.concatenate([dW1.ravel(), db1, dW2.ravel(), db2, dW3.ravel(), db3])


def gaussian_logp(mean: np.ndarray, log_std: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Diagonal-Gaussian log density, one value per row."""
    z = (actions - mean) / np.exp(log_std)
    return -0.5 * np.sum(z * z, axis=-1) - np.sum(log_std) - 0.5 * actions.shape[-1] * LOG_2PI


def surrogate_loss_and_grad(arch: PolicyArch, theta: np.ndarray, states: np.ndarray,
                            actions: np.ndarray, logp_old: np.ndarray,
                            advantages: np.ndarray, clip_ratio: float):
    """Clipped-surrogate loss (negated for minimization) and its gradient.

    The gradient flows through the action mean and the exploration
    log-stds; probability ratios outside the clip band with a disadvantage
    contribute zero gradient, as in the usual clipped objective.
    """
    net = MlpShape(arch.state_dim, arch.action_dim, arch.hidden)
    w = theta[: net.n_params]
    log_std = theta[net.n_params:]
    mean, cache = mlp_forward(net, w, states)
    logp = gaussian_logp(mean, log_std, actions)
    ratio = np.exp(logp - logp_old)
    clipped = np.clip(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio)
    per_sample = np.minimum(ratio * advantages, clipped * advantages)
    loss = -float(per_sample.mean())

    n = states.shape[0]
    active = ratio * advantages <= clipped * advantages
    dlogp = -(advantages * ratio * active) / n  # d(loss)/d(logp)
    sigma2 = np.exp(2.0 * log_std)
    dmean = dlogp[:, None] * (actions - mean) / sigma2
    z2 = ((actions - mean) ** 2) / sigma2
    dlog_std = (dlogp[:, None] * (z2 - 1.0)).sum(axis=0)
    grad = np.concatenate([mlp_backward(net, w, cache, dmean), dlog_std])
    return loss, grad


class Adam:
    """First-order adaptive-moment updates (beta1=0.9, beta2=0.999, eps=1e-8)."""

    def __init__(self, n_params: int, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class RolloutBatch:
    """One collection pass: n domains x n_tau recorded trajectories."""

    states: np.ndarray  # (T+1, B, state_dim)
    actions: np.ndarray  # (T, B, action_dim)
    rewards: np.ndarray  # (T, B)
    domain_index: np.ndarray  # (B,) in [0, n)
    returns: np.ndarray  # (B,) discounted returns

    @property
    def n_trajectories(self) -> int:
        return self.states.shape[1]


def collect_batch(env_family, arch: PolicyArch, theta: np.ndarray, domain_sets: Sequence,
                  n_tau: int, gamma: float, seed: int, explore: bool = True,
                  collect_tag=()) -> RolloutBatch:
    """Roll out n_tau exploration trajectories in each sampled domain.

    Seed paths are (seed, *collect_tag, domain, rollout): the batch is a
    pure function of its arguments, and exploration noise is drawn from a
    stream independent of the environments' init/observation streams.
    """
    if len(domain_sets) < 1 or n_tau < 1:
        raise ValueError("need at least one domain and one rollout per domain")
    n = len(domain_sets)
    env = env_family.make_many(list(domain_sets), repeats=n_tau)
    slot_paths = [(seed, *collect_tag, i, r) for i in range(n) for r in range(n_tau)]
    streams = rollout_streams(slot_paths)
    if explore:
        noise = np.stack([g.normal(size=(env.horizon, arch.action_dim))
                          for g in streams.exploration])
        std = np.exp(unflatten(arch, theta)["log_std"])

        def act_fn(obs, t):
            return policy_mean_stacked(arch, theta, obs) + std * noise[:, t]
    else:
        def act_fn(obs, t):
            return policy_mean_stacked(arch, theta, obs)

    returns, states, actions, rewards = run_episodes(env, act_fn, streams, gamma, record=True)
    return RolloutBatch(states=states, actions=actions, rewards=rewards,
                        domain_index=np.repeat(np.arange(n), n_tau), returns=returns)


def pol_opt_clipped_pg(spec: PolOptSpec, env_family, arch: PolicyArch,
                       domains: Sequence, init_theta: np.ndarray, seed: int):
    """Proximal-style clipped-surrogate policy gradient with a value head.

    Per iteration: collect a fresh exploration batch over all domains,
    estimate advantages with the exponentially-weighted TD recursion
    (normalized per update), then take Adam steps on the clipped surrogate
    and squared-error steps on a separate value network of the same
    architecture.
    """
    theta = np.array(init_theta, dtype=float, copy=True)
    value_shape = MlpShape(arch.state_dim, 1, arch.hidden)
    value_w = init_mlp_weights(value_shape, stream(seed, "value-init"), spec.weight_scale)
    pol_adam = Adam(theta.size, spec.learning_rate)
    val_adam = Adam(value_w.size, spec.value_lr)
    trace = []
    for it in range(spec.iterations):
        batch = collect_batch(env_family, arch, theta, domains, spec.n_tau, spec.gamma,
                              seed, explore=True, collect_tag=("pg-collect", it))
        T, B, _ = batch.actions.shape
        if spec.cvar_epsilon is not None:
            keep = epopt_filter(batch.returns, spec.cvar_epsilon)
        else:
            keep = np.arange(B)
        flat_states = batch.states[:, keep].reshape((T + 1) * keep.size, arch.state_dim)
        values = mlp_forward(value_shape, value_w, flat_states)[0].reshape(T + 1, keep.size)
        adv = gae_advantages(batch.rewards[:, keep].T, values.T, spec.gamma, spec.lam).T
        targets = adv + values[:-1]

        states2d = batch.states[:-1, keep].reshape(T * keep.size, arch.state_dim)
        actions2d = batch.actions[:, keep].reshape(T * keep.size, arch.action_dim)
        adv_norm = normalize_advantages(adv.reshape(-1))
        targets2d = targets.reshape(-1)
        net = MlpShape(arch.state_dim, arch.action_dim, arch.hidden)
        mean0, _ = mlp_forward(net, theta[: net.n_params], states2d)
        logp_old = gaussian_logp(mean0, theta[net.n_params:], actions2d)

        for _ in range(spec.epochs):
            loss, grad = surrogate_loss_and_grad(arch, theta, states2d, actions2d,
                                                 logp_old, adv_norm, spec.clip_ratio)
            if not np.all(np.isfinite(grad)):
                raise RuntimeError(f"nonfinite policy gradient at iteration {it}")
            theta = pol_adam.step(theta, grad)
            v_pred, v_cache = mlp_forward(value_shape, value_w, states2d)
            dv = 2.0 * (v_pred[:, 0] - targets2d)[:, None] / targets2d.size
            v_grad = mlp_backward(value_shape, value_w, v_cache, dv)
            value_w = val_adam.step(value_w, v_grad)

        trace.append((it, float(batch.returns.mean()), float(batch.returns.std())))
    return theta, trace


def init_mlp_weights(shape: MlpShape, rng: np.random.Generator, weight_scale: float = 1.0) -> np.ndarray:
    """Scaled 1/sqrt(fan_in) weights, zero biases, as one flat vector."""
    h1, h2 = shape.hidden
    blocks = [
        rng.normal(0.0, weight_scale / np.sqrt(shape.in_dim), size=(shape.in_dim, h1)).ravel(),
        np.zeros(h1),
        rng.normal(0.0, weight_scale / np.sqrt(h1), size=(h1, h2)).ravel(),
        np.zeros(h2),
        rng.normal(0.0, weight_scale / np.sqrt(h2), size=(h2, shape.out_dim)).ravel(),
        np.zeros(shape.out_dim),
    ]
    return np.concatenate(blocks)
