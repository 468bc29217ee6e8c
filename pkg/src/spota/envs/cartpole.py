"""Quanser linear inverted pendulum (Cart-Pole): dynamics, reward, randomization.

State layout (4-D): (x, alpha, x_dot, alpha_dot) -- cart position relative to
the rail center [m] and pole angle [rad], zero when hanging straight down.
The action is the motor voltage.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..domains import DomainDistribution, DomainParamSet, DomainParamSpec
from .base import VecEnv
from .wrappers import wrap_action_delay, wrap_obs_noise

DEG = math.pi / 180.0


@dataclass(frozen=True)
class CartPoleParams:
    """Randomized physical parameters; l_p is the half pole length."""

    g: float = 9.81
    m_c: float = 0.38
    m_p: float = 0.127
    l_p: float = 0.089
    l_r: float = 0.814
    r_mp: float = 6.35e-3
    K_g: float = 3.71
    eta_g: float = 0.9
    eta_m: float = 0.9
    J_m: float = 3.9e-7
    k_m: float = 7.67e-3
    R_m: float = 2.6
    B_eq: float = 2.7
    B_p: float = 1.2e-3
    delay_steps: int = 5

    @classmethod
    def from_domain(cls, xi: DomainParamSet) -> "CartPoleParams":
        names = [f.name for f in cls.__dataclass_fields__.values() if f.name != "delay_steps"]
        kwargs = {n: xi[n] for n in names if n in xi}
        if "act_delay" in xi:
            kwargs["delay_steps"] = int(round(xi["act_delay"]))
        return cls(**kwargs)

    @classmethod
    def from_domains(cls, xis, repeats: int = 1) -> "CartPoleParams":
        """Per-slot parameter arrays; see BallBalancerParams.from_domains."""
        names = [f.name for f in cls.__dataclass_fields__.values() if f.name != "delay_steps"]
        kwargs = {n: np.repeat([xi[n] for xi in xis], repeats) for n in names if n in xis[0]}
        if "act_delay" in xis[0]:
            delays = np.rint([xi["act_delay"] for xi in xis]).astype(int)
            kwargs["delay_steps"] = np.repeat(delays, repeats)
        return cls(**kwargs)


@dataclass(frozen=True)
class CartPoleDerived:
    J_p: float  # pole rotary inertia
    J_eq: float  # combined linear inertia


def qcp_derived(p: CartPoleParams) -> CartPoleDerived:
    return CartPoleDerived(
        J_p=p.m_p * p.l_p**2 / 3.0,
        J_eq=p.m_c + p.eta_g * p.K_g**2 * p.J_m / p.r_mp**2,
    )


def qcp_force(V, xdot, p: CartPoleParams):
    """Motor force from the commanded voltage and cart speed.

    The voltage-to-force map keeps the published model expression verbatim:
    the whole inner term (including the drive voltage) is divided by the
    pinion radius, which makes the force gain deliberately large.
    """
    pre = p.eta_g * p.K_g * p.k_m / (p.R_m * p.r_mp)
    return pre * (p.eta_m * np.asarray(V, dtype=float) - p.K_g * p.k_m * np.asarray(xdot, dtype=float)) / p.r_mp


def qcp_accel(s: np.ndarray, F, p: CartPoleParams, d: CartPoleDerived) -> tuple[np.ndarray, np.ndarray]:
    """Solve the 2x2 linear system for (x_dotdot, alpha_dotdot) given the force.

    The centripetal coupling enters the cart equation with the sign required
    for energy conservation of the undamped, unforced system.
    """
    x, alpha, xd, ad = np.moveaxis(np.asarray(s, dtype=float), -1, 0)
    ml = p.m_p * p.l_p
    m00 = p.m_p + d.J_eq
    m01 = ml * np.cos(alpha)
    m11 = d.J_p + p.m_p * p.l_p**2
    det = m00 * m11 - m01 * m01
    if np.any(det <= 0.0):
        raise FloatingPointError("singular mass matrix")
    r0 = F + ml * np.sin(alpha) * ad**2 - p.B_eq * xd
    r1 = -ml * p.g * np.sin(alpha) - p.B_p * ad
    xdd = (m11 * r0 - m01 * r1) / det
    add = (m00 * r1 - m01 * r0) / det
    return xdd, add


def qcp_dynamics(s: np.ndarray, a: np.ndarray, p: CartPoleParams,
                 d: CartPoleDerived, action_limit: float = 10.0) -> np.ndarray:
    """Time derivative of the 4-D state under a voltage command."""
    s = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s)):
        raise FloatingPointError("nonfinite state")
    V = np.clip(np.asarray(a, dtype=float)[..., 0], -action_limit, action_limit)
    xd = s[..., 2]
    F = qcp_force(V, xd, p)
    xdd, add = qcp_accel(s, F, p, d)
    return np.stack([s[..., 2], s[..., 3], xdd, add], axis=-1)


def qcp_energy(s: np.ndarray, p: CartPoleParams, d: CartPoleDerived) -> np.ndarray:
    """Total mechanical energy T + V of the cart-pole (for conservation checks)."""
    s = np.asarray(s, dtype=float)
    x, alpha, xd, ad = np.moveaxis(s, -1, 0)
    ml = p.m_p * p.l_p
    kinetic = 0.5 * (p.m_p + d.J_eq) * xd**2 + ml * np.cos(alpha) * xd * ad \
        + 0.5 * (d.J_p + p.m_p * p.l_p**2) * ad**2
    potential = -ml * p.g * np.cos(alpha)
    return kinetic + potential


def wrap_angle(angle):
    """Wrap to [-pi, pi)."""
    return (np.asarray(angle, dtype=float) + math.pi) % (2.0 * math.pi) - math.pi


def qcp_reward(s, a, Q, R) -> np.ndarray:
    """Exponentiated quadratic reward in (0, 1], equal to 1 at the upright pose.

    The error state wraps the pole angle about the upright position so that
    balancing (alpha = pi) is rewarded, not the hanging rest pose.
    """
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    e = np.stack([s[..., 0], wrap_angle(s[..., 1] - math.pi), s[..., 2], s[..., 3]], axis=-1)
    cost = np.sum(e * e * np.asarray(Q, float), axis=-1) + np.sum(a * a * np.asarray(R, float), axis=-1)
    return np.exp(-cost)


@dataclass
class CartPoleSettings:
    """Fixed (non-randomized) simulation settings."""

    dt: float = 0.002
    horizon: int = 2500
    action_limit: float = 10.0
    Q: tuple = (10.0, 1e3, 5e-2, 5e-3)
    R: tuple = (1e-4,)
    init_angle_std: float = 0.05  # near-upright start for the balancing task
    obs_noise: bool = True
    # stds: position 5e-3 m, angle 0.5 deg, velocity 0.05 m/s, rate 2 deg/s
    obs_noise_stds: tuple = (5e-3, 0.5 * DEG, 0.05, 2.0 * DEG)


class CartPoleEnv(VecEnv):
    """Batched Cart-Pole episode simulator (without wrappers).

    Rail-end contact clamps the cart position and zeroes its velocity.
    """

    state_dim = 4
    action_dim = 1

    def __init__(self, params: CartPoleParams, settings: CartPoleSettings, batch: int = 1):
        super().__init__(batch, settings.horizon, settings.dt)
        self.params = params
        self.derived = qcp_derived(params)
        self.settings = settings
        self._Q = np.asarray(settings.Q, dtype=float)
        self._R = np.asarray(settings.R, dtype=float)

    def sample_init(self, rng: np.random.Generator) -> np.ndarray:
        s = np.zeros(self.state_dim)
        s[1] = math.pi + self.settings.init_angle_std * rng.normal()
        return s

    def derivative(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        return qcp_dynamics(s, a, self.params, self.derived, self.settings.action_limit)

    def step_state(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        out = super().step_state(s, a)
        bound = 0.5 * self.params.l_r
        hit = np.abs(out[..., 0]) > bound
        if np.any(hit):
            out = out.copy()
            out[..., 0] = np.clip(out[..., 0], -bound, bound)
            out[..., 2] = np.where(hit, 0.0, out[..., 2])
        return out

    def reward(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        a = np.clip(a, -self.settings.action_limit, self.settings.action_limit)
        return qcp_reward(s, a, self._Q, self._R)


def qcp_distribution() -> DomainDistribution:
    """Default Cart-Pole randomization (means/bounds per the platform model)."""
    pos = (1e-8, math.inf)
    frac = (1e-8, 1.0)
    return DomainDistribution((
        DomainParamSpec("g", "normal", (9.81, 1.962), pos, "m/s^2"),
        DomainParamSpec("m_c", "normal", (0.38, 0.076), pos, "kg"),
        DomainParamSpec("m_p", "normal", (0.127, 2.54e-2), pos, "kg"),
        DomainParamSpec("l_p", "normal", (0.089, 1.78e-2), pos, "m"),
        DomainParamSpec("l_r", "normal", (0.814, 0.163), pos, "m"),
        DomainParamSpec("r_mp", "normal", (6.35e-3, 1.27e-3), pos, "m"),
        DomainParamSpec("K_g", "normal", (3.71, 0.0), pos, "-"),
        DomainParamSpec("eta_g", "uniform", (1.0, 0.8), frac, "-"),
        DomainParamSpec("eta_m", "uniform", (1.0, 0.8), frac, "-"),
        DomainParamSpec("J_m", "normal", (3.9e-7, 0.0), pos, "kg m^2"),
        DomainParamSpec("k_m", "normal", (7.67e-3, 1.52e-3), pos, "N m/A"),
        DomainParamSpec("R_m", "normal", (2.6, 0.52), pos, "ohm"),
        DomainParamSpec("B_eq", "uniform", (5.4, 0.0), (0.0, math.inf), "N s/m"),
        DomainParamSpec("B_p", "uniform", (2.4e-3, 0.0), (0.0, math.inf), "N s"),
        DomainParamSpec("act_delay", "uniform", (0.0, 10.0), (0.0, math.inf), "steps"),
    ))


@dataclass
class CartPoleFamily:
    """Environment family: default distribution plus a wrapped-env factory."""

    settings: CartPoleSettings = field(default_factory=CartPoleSettings)
    name: str = "qcp"
    state_dim: int = 4
    action_dim: int = 1

    def default_distribution(self) -> DomainDistribution:
        return qcp_distribution()

    def make(self, xi: DomainParamSet, batch: int = 1) -> VecEnv:
        params = CartPoleParams.from_domain(xi)
        return self._wrap(CartPoleEnv(params, self.settings, batch), params)

    def make_many(self, xis, repeats: int = 1) -> VecEnv:
        """One batched env covering ``repeats`` rollout slots per domain."""
        params = CartPoleParams.from_domains(xis, repeats)
        return self._wrap(CartPoleEnv(params, self.settings, len(xis) * repeats), params)

    def _wrap(self, env: VecEnv, params: CartPoleParams) -> VecEnv:
        env = wrap_action_delay(env, params.delay_steps)
        if self.settings.obs_noise:
            env = wrap_obs_noise(env, self.settings.obs_noise_stds)
        return env
