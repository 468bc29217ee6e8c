"""Quanser 2-DoF Ball-Balancer: dynamics, backlash, reward, randomization table.

State layout (8-D):  (theta_x, theta_y, x_b, y_b, theta_x_dot, theta_y_dot,
x_b_dot, y_b_dot) -- motor shaft angles [rad], ball position relative to the
plate center [m], and their rates.  Actions are the two servo voltages.
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
class BallBalancerParams:
    """Randomized physical parameters (units as sampled; offsets in deg)."""

    g: float = 9.81
    m_b: float = 5e-3
    r_b: float = 1.96e-2
    l_p: float = 0.275
    r_kin: float = 2.54e-2
    K_g: float = 70.0
    eta_g: float = 0.8
    eta_m: float = 0.69
    J_l: float = 5.28e-5
    J_m: float = 4.61e-7
    k_m: float = 7.7e-3
    R_m: float = 2.6
    B_eq: float = 0.076875
    c_v: float = 0.025625
    V_thold_x_plus: float = 0.2207
    V_thold_x_minus: float = -0.04561
    V_thold_y_plus: float = 0.18125
    V_thold_y_minus: float = -0.045650
    delta_theta_x: float = 0.0
    delta_theta_y: float = 0.0
    delay_steps: int = 15

    @classmethod
    def from_domain(cls, xi: DomainParamSet) -> "BallBalancerParams":
        names = [f.name for f in cls.__dataclass_fields__.values() if f.name != "delay_steps"]
        kwargs = {n: xi[n] for n in names if n in xi}
        if "act_delay" in xi:
            kwargs["delay_steps"] = int(round(xi["act_delay"]))
        return cls(**kwargs)

    @classmethod
    def from_domains(cls, xis, repeats: int = 1) -> "BallBalancerParams":
        """Per-slot parameter arrays for a batch covering several domains.

        Slot layout: all ``repeats`` rollouts of the first domain, then the
        second, and so on.  Every field becomes an array of length
        len(xis) * repeats, which the dynamics broadcast elementwise.
        """
        names = [f.name for f in cls.__dataclass_fields__.values() if f.name != "delay_steps"]
        kwargs = {n: np.repeat([xi[n] for xi in xis], repeats) for n in names if n in xis[0]}
        if "act_delay" in xis[0]:
            delays = np.rint([xi["act_delay"] for xi in xis]).astype(int)
            kwargs["delay_steps"] = np.repeat(delays, repeats)
        return cls(**kwargs)


@dataclass(frozen=True)
class BallBalancerDerived:
    """Constants computed from the randomized parameters."""

    c_kin: float
    A_m: float
    B_v: float
    J_eq: float
    J_b: float
    zeta: float


def qbb_derived(p: BallBalancerParams) -> BallBalancerDerived:
    """Kinematic constant, combined motor constants, and ball inertias."""
    J_b = 0.4 * p.m_b * p.r_b**2
    return BallBalancerDerived(
        c_kin=2.0 * p.r_kin / p.l_p,
        A_m=p.eta_g * p.K_g * p.eta_m * p.k_m / p.R_m,
        B_v=p.eta_g * p.K_g**2 * p.eta_m * p.k_m**2 / p.R_m + p.B_eq,
        J_eq=p.eta_g * p.K_g**2 * p.J_m + p.J_l,
        J_b=J_b,
        zeta=p.m_b * p.r_b**2 + J_b,
    )


def apply_backlash(V, thold_plus, thold_minus):
    """Gear backlash dead-zone: voltages inside [thold_minus, thold_plus] are zeroed."""
    thold_plus = np.asarray(thold_plus, dtype=float)
    thold_minus = np.asarray(thold_minus, dtype=float)
    if np.any(thold_minus > 0.0) or np.any(thold_plus < 0.0):
        raise ValueError("backlash thresholds must straddle zero")
    V = np.asarray(V, dtype=float)
    out = np.where((V >= thold_minus) & (V <= thold_plus), 0.0, V)
    return float(out) if out.ndim == 0 else out


def qbb_dynamics(s: np.ndarray, a: np.ndarray, p: BallBalancerParams,
                 d: BallBalancerDerived, action_limit: float = 10.0) -> np.ndarray:
    """Time derivative of the 8-D state under 2-D voltage commands.

    Voltages saturate at the actuator box and pass the backlash dead-zone;
    the servo offsets shift the motor angles seen by the plate kinematics.
    Plate angles follow the small-angle map alpha = c_kin * theta.
    """
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(s)):
        raise FloatingPointError("nonfinite state")
    th_x, th_y, x_b, y_b, thd_x, thd_y, xd_b, yd_b = np.moveaxis(s, -1, 0)
    V = np.clip(a, -action_limit, action_limit)
    V_x = apply_backlash(V[..., 0], p.V_thold_x_plus, p.V_thold_x_minus)
    V_y = apply_backlash(V[..., 1], p.V_thold_y_plus, p.V_thold_y_minus)

    thdd_x = (d.A_m * V_x - d.B_v * thd_x) / d.J_eq
    thdd_y = (d.A_m * V_y - d.B_v * thd_y) / d.J_eq

    # plate angles via the kinematic constant; offsets enter before the sine
    alpha_d, alpha_dd = d.c_kin * thd_x, d.c_kin * thdd_x
    beta_d, beta_dd = d.c_kin * thd_y, d.c_kin * thdd_y
    tx = th_x + p.delta_theta_x * DEG
    ty = th_y + p.delta_theta_y * DEG

    r2 = p.r_b**2
    xdd_b = (-p.c_v * xd_b * r2 - d.J_b * p.r_b * alpha_dd + p.m_b * x_b * alpha_d**2 * r2
             + d.c_kin * p.m_b * p.g * r2 * np.sin(tx)) / d.zeta
    ydd_b = (-p.c_v * yd_b * r2 - d.J_b * p.r_b * beta_dd + p.m_b * y_b * beta_d**2 * r2
             + d.c_kin * p.m_b * p.g * r2 * np.sin(ty)) / d.zeta

    return np.stack([thd_x, thd_y, xd_b, yd_b, thdd_x, thdd_y, xdd_b, ydd_b], axis=-1)


def quadratic_cost(s: np.ndarray, a: np.ndarray, Q: np.ndarray, R: np.ndarray) -> np.ndarray:
    return np.sum(s * s * Q, axis=-1) + np.sum(a * a * R, axis=-1)


def qbb_reward_scale(Q, R, state_bounds, action_bounds, r_min: float) -> float:
    """Scaling constant c = ln(r_min) / max cost over the bounding box.

    For diagonal Q, R the maximum sits at the box corner.
    """
    if not 0.0 < r_min < 1.0:
        raise ValueError("r_min must lie in (0, 1)")
    max_cost = quadratic_cost(np.asarray(state_bounds, float), np.asarray(action_bounds, float),
                              np.asarray(Q, float), np.asarray(R, float))
    if max_cost <= 0.0:
        raise ValueError("bounding-box cost is zero; cannot scale the reward")
    return math.log(r_min) / max_cost


def qbb_reward(s, a, Q, R, r_min: float, state_bounds, action_bounds) -> np.ndarray:
    """Exponentiated quadratic reward in [r_min, 1] over the bounding box."""
    c = qbb_reward_scale(Q, R, state_bounds, action_bounds, r_min)
    return np.exp(c * quadratic_cost(np.asarray(s, float), np.asarray(a, float),
                                     np.asarray(Q, float), np.asarray(R, float)))


@dataclass
class BallBalancerSettings:
    """Fixed (non-randomized) simulation settings."""

    dt: float = 0.002
    horizon: int = 2000
    action_limit: float = 10.0
    r_min: float = 1e-4
    Q: tuple = (1.0, 1.0, 5e3, 5e3, 1e-2, 1e-2, 5e-2, 5e-2)
    R: tuple = (1e-3, 1e-3)
    # reward bounding box: |theta| <= pi/6, ball within half plate, rate caps
    state_bounds: tuple = (math.pi / 6, math.pi / 6, 0.1375, 0.1375, math.pi, math.pi, 0.5, 0.5)
    init_radius: float = 0.1
    obs_noise: bool = True
    # per-dimension stds: angles 0.5 deg, positions 5e-3 m, rates 2 deg/s, 0.05 m/s
    obs_noise_stds: tuple = (0.5 * DEG, 0.5 * DEG, 5e-3, 5e-3, 2.0 * DEG, 2.0 * DEG, 0.05, 0.05)


class BallBalancerEnv(VecEnv):
    """Batched Ball-Balancer episode simulator (without wrappers)."""

    state_dim = 8
    action_dim = 2

    def __init__(self, params: BallBalancerParams, settings: BallBalancerSettings, batch: int = 1):
        super().__init__(batch, settings.horizon, settings.dt)
        self.params = params
        self.derived = qbb_derived(params)
        self.settings = settings
        self._Q = np.asarray(settings.Q, dtype=float)
        self._R = np.asarray(settings.R, dtype=float)
        self._c = qbb_reward_scale(self._Q, self._R, settings.state_bounds,
                                   (settings.action_limit,) * 2, settings.r_min)

    def sample_init(self, rng: np.random.Generator) -> np.ndarray:
        """Ball placed uniformly on a circle around the plate center, at rest."""
        phi = rng.uniform(0.0, 2.0 * math.pi)
        s = np.zeros(self.state_dim)
        s[2] = self.settings.init_radius * math.cos(phi)
        s[3] = self.settings.init_radius * math.sin(phi)
        return s

    def derivative(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        return qbb_dynamics(s, a, self.params, self.derived, self.settings.action_limit)

    def reward(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        a = np.clip(a, -self.settings.action_limit, self.settings.action_limit)
        return np.exp(self._c * quadratic_cost(s, a, self._Q, self._R))


def qbb_distribution() -> DomainDistribution:
    """Default Ball-Balancer randomization (means/bounds per the platform model)."""
    pos = (1e-8, math.inf)
    frac = (1e-8, 1.0)
    return DomainDistribution((
        DomainParamSpec("g", "normal", (9.81, 1.962), pos, "m/s^2"),
        DomainParamSpec("m_b", "normal", (5e-3, 6e-4), pos, "kg"),
        DomainParamSpec("r_b", "normal", (1.96e-2, 3.93e-3), pos, "m"),
        DomainParamSpec("l_p", "normal", (0.275, 5.5e-2), pos, "m"),
        DomainParamSpec("r_kin", "normal", (2.54e-2, 3.08e-3), pos, "m"),
        DomainParamSpec("K_g", "normal", (70.0, 14.0), pos, "-"),
        DomainParamSpec("eta_g", "uniform", (1.0, 0.6), frac, "-"),
        DomainParamSpec("eta_m", "uniform", (0.89, 0.49), frac, "-"),
        DomainParamSpec("J_l", "normal", (5.28e-5, 1.06e-5), pos, "kg m^2"),
        DomainParamSpec("J_m", "normal", (4.61e-7, 9.22e-8), pos, "kg m^2"),
        DomainParamSpec("k_m", "normal", (7.7e-3, 1.52e-3), pos, "N m/A"),
        DomainParamSpec("R_m", "normal", (2.6, 0.52), pos, "ohm"),
        DomainParamSpec("B_eq", "uniform", (0.15, 3.75e-3), (0.0, math.inf), "N m s"),
        DomainParamSpec("c_v", "uniform", (5.0e-2, 1.25e-3), (0.0, math.inf), "-"),
        DomainParamSpec("V_thold_x_plus", "uniform", (0.353, 8.84e-2), (0.0, math.inf), "V"),
        DomainParamSpec("V_thold_x_minus", "uniform", (-8.90e-2, -2.22e-3), (-math.inf, 0.0), "V"),
        DomainParamSpec("V_thold_y_plus", "uniform", (0.290, 7.25e-2), (0.0, math.inf), "V"),
        DomainParamSpec("V_thold_y_minus", "uniform", (-7.30e-2, -1.83e-2), (-math.inf, 0.0), "V"),
        DomainParamSpec("delta_theta_x", "uniform", (-5.0, 5.0), units="deg"),
        DomainParamSpec("delta_theta_y", "uniform", (-5.0, 5.0), units="deg"),
        DomainParamSpec("act_delay", "uniform", (0.0, 30.0), (0.0, math.inf), "steps"),
    ))


@dataclass
class BallBalancerFamily:
    """Environment family: default distribution plus a wrapped-env factory."""

    settings: BallBalancerSettings = field(default_factory=BallBalancerSettings)
    name: str = "qbb"
    state_dim: int = 8
    action_dim: int = 2

    def default_distribution(self) -> DomainDistribution:
        return qbb_distribution()

    def make(self, xi: DomainParamSet, batch: int = 1) -> VecEnv:
        params = BallBalancerParams.from_domain(xi)
        return self._wrap(BallBalancerEnv(params, self.settings, batch), params)

    def make_many(self, xis, repeats: int = 1) -> VecEnv:
        """One batched env covering ``repeats`` rollout slots per domain."""
        params = BallBalancerParams.from_domains(xis, repeats)
        return self._wrap(BallBalancerEnv(params, self.settings, len(xis) * repeats), params)

    def _wrap(self, env: VecEnv, params: BallBalancerParams) -> VecEnv:
        env = wrap_action_delay(env, params.delay_steps)
        if self.settings.obs_noise:
            env = wrap_obs_noise(env, self.settings.obs_noise_stds)
        return env
