"""Task bundles plugging environments and optimizers into the meta-loop."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .catapult import MARS, VENUS, CatapultDomain, catapult_height, catapult_opt_policy
from .domains import DomainDistribution, DomainParamSet, DomainParamSpec
from .policy import PolicyArch, init_policy_params, reset_exploration
from .polopt import PolOptSpec, cem_maximize, pol_opt_cem, pol_opt_clipped_pg
from .rng import stream
from .rollout import estimate_return, mean_policy_act_fn


@dataclass
class RlTask:
    """Network policy trained in a simulated environment family."""

    family: object  # BallBalancerFamily or CartPoleFamily
    spec: PolOptSpec
    arch: PolicyArch = None

    def __post_init__(self):
        if self.arch is None:
            self.arch = PolicyArch(self.family.state_dim, self.family.action_dim)

    def initial_policy(self, seed: int) -> np.ndarray:
        return init_policy_params(self.arch, stream(seed, "policy-init"),
                                  self.spec.weight_scale, self.spec.log_std_init)

    def train(self, init_policy, domains, seed: int):
        if self.spec.method == "cem":
            return pol_opt_cem(self.spec, self.family, self.arch, domains, init_policy, seed)
        if self.spec.method == "clipped-pg":
            return pol_opt_clipped_pg(self.spec, self.family, self.arch, domains,
                                      init_policy, seed)
        raise ValueError(f"method {self.spec.method!r} not available for simulated tasks")

    def reset_exploration(self, policy):
        return reset_exploration(self.arch, policy, self.spec.log_std_init)

    def estimate_return(self, policy, xi: DomainParamSet, n_J: int, seed_base: int) -> float:
        return estimate_return(self.family.make, xi, mean_policy_act_fn(self.arch, policy),
                               n_J, seed_base, self.spec.gamma)


def catapult_distribution(psi: float = 0.7) -> DomainDistribution:
    """Two-point planet indicator: 0 selects the first domain, 1 the second."""
    return DomainDistribution((
        DomainParamSpec("planet", "two-point", (0.0, 1.0, psi), (0.0, 1.0), "-"),
    ))


@dataclass
class CatapultTask:
    """Scalar spring-extension policy on the analytic two-planet catapult.

    With ``spec.method == "exact"`` the training step returns the
    closed-form optimum of the sampled planet counts, which makes every
    stage of the meta-loop exactly verifiable.
    """

    spec: PolOptSpec
    doms: tuple[CatapultDomain, CatapultDomain] = (MARS, VENUS)
    m: float = 1.0

    def domain_of(self, xi: DomainParamSet) -> CatapultDomain:
        return self.doms[int(round(xi["planet"]))]

    def initial_policy(self, seed: int) -> float:
        dom_m, dom_v = self.doms
        lo, hi = min(dom_m.x, dom_v.x), max(dom_m.x, dom_v.x)
        return float(stream(seed, "policy-init").uniform(lo, hi))

    def train(self, init_policy, domains, seed: int):
        planets = [int(round(xi["planet"])) for xi in domains]
        n_v = sum(planets)
        n_m = len(planets) - n_v
        if self.spec.method == "exact":
            theta = catapult_opt_policy(n_m, n_v, self.doms)
            return theta, [(0, self._jhat(theta, domains), 0.0)]
        if self.spec.method == "cem":
            doms = [self.domain_of(xi) for xi in domains]

            def objective(candidates: np.ndarray) -> np.ndarray:
                thetas = candidates[:, 0]
                heights = [catapult_height(thetas, d, self.m) for d in doms]
                return -np.mean(heights, axis=0)

            result = cem_maximize(objective, np.array([float(init_policy)]),
                                  self.spec.init_std, self.spec.iterations,
                                  self.spec.population, self.spec.elite,
                                  stream(seed, "cem-sample"), min_std=self.spec.min_std)
            return float(result.params[0]), result.trace
        raise ValueError(f"method {self.spec.method!r} not available for the catapult task")

    def reset_exploration(self, policy):
        return policy

    def estimate_return(self, policy, xi: DomainParamSet, n_J: int, seed_base: int) -> float:
        # the objective is deterministic: n_J and the seed path are irrelevant
        return -catapult_height(float(policy), self.domain_of(xi), self.m)

    def _jhat(self, theta: float, domains) -> float:
        heights = [catapult_height(theta, self.domain_of(xi), self.m) for xi in domains]
        return -float(np.mean(heights))
