"""Simulated environments and wrappers."""
from .base import SingleEnv, VecEnv, VecEnvWrapper, rk4_step
from .ballbalancer import (
    BallBalancerDerived,
    BallBalancerEnv,
    BallBalancerFamily,
    BallBalancerParams,
    BallBalancerSettings,
    apply_backlash,
    qbb_derived,
    qbb_distribution,
    qbb_dynamics,
    qbb_reward,
    qbb_reward_scale,
)
from .cartpole import (
    CartPoleDerived,
    CartPoleEnv,
    CartPoleFamily,
    CartPoleParams,
    CartPoleSettings,
    qcp_accel,
    qcp_derived,
    qcp_distribution,
    qcp_dynamics,
    qcp_energy,
    qcp_force,
    qcp_reward,
    wrap_angle,
)
from .wrappers import ActionDelayWrapper, ObsNoiseWrapper, wrap_action_delay, wrap_obs_noise
