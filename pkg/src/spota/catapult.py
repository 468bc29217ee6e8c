"""Analytic two-planet catapult: closed-form optima and the bias study.

A linear-spring catapult shoots straight up on one of two planets drawn
with probability ``psi`` for the second one.  The spring extension theta is
the single policy parameter, the objective is the negative peak height, and
every optimum has a closed form -- which makes the optimistic bias of
sample-based policy optimization exactly measurable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import stream


@dataclass(frozen=True)
class CatapultDomain:
    """One planet: gravity, spring stiffness, spring pre-extension."""

    g: float
    k: float
    x: float

    def __post_init__(self):
        if self.g <= 0 or self.k <= 0:
            raise ValueError("gravity and stiffness must be positive")


MARS = CatapultDomain(g=3.71, k=1000.0, x=0.5)
VENUS = CatapultDomain(g=8.87, k=3000.0, x=1.5)


def catapult_height(theta: float, dom: CatapultDomain, m: float):
    """Peak height k (theta - x)^2 / (2 m g); the return is its negative."""
    if m <= 0:
        raise ValueError("mass must be positive")
    theta = np.asarray(theta, dtype=float)
    h = dom.k * (theta - dom.x) ** 2 / (2.0 * m * dom.g)
    return float(h) if h.ndim == 0 else h


def catapult_opt_policy(n_M: int, n_V: int, doms: tuple[CatapultDomain, CatapultDomain]) -> float:
    """Optimal extension for a sample with n_M Mars and n_V Venus draws.

    theta*_n = (x_M c_M + x_V c_V) / (c_M + c_V) with c_M = n_M k_M g_V and
    c_V = n_V k_V g_M; the mass cancels.  With one count zero this reduces
    to the other planet's pre-extension.
    """
    if n_M < 0 or n_V < 0 or n_M + n_V < 1:
        raise ValueError("need at least one sampled domain")
    dom_m, dom_v = doms
    c_m = n_M * dom_m.k * dom_v.g
    c_v = n_V * dom_v.k * dom_m.g
    return (dom_m.x * c_m + dom_v.x * c_v) / (c_m + c_v)


def catapult_true_opt(psi: float, doms: tuple[CatapultDomain, CatapultDomain]) -> float:
    """Optimal extension under the true Bernoulli(psi) planet distribution."""
    if not 0.0 <= psi <= 1.0:
        raise ValueError("psi must lie in [0, 1]")
    dom_m, dom_v = doms
    c_m = (1.0 - psi) * dom_m.k * dom_v.g
    c_v = psi * dom_v.k * dom_m.g
    return (dom_m.x * c_m + dom_v.x * c_v) / (c_m + c_v)


def catapult_Jhat(theta: float, sampled_domains, m: float) -> float:
    """Sample-average objective -(1/n) sum_i h(theta, xi_i)."""
    if len(sampled_domains) == 0:
        raise ValueError("need at least one sampled domain")
    return -float(np.mean([catapult_height(theta, d, m) for d in sampled_domains]))


def catapult_J(theta, psi: float, doms: tuple[CatapultDomain, CatapultDomain], m: float):
    """True (psi-weighted) expected objective."""
    dom_m, dom_v = doms
    return -((1.0 - psi) * catapult_height(theta, dom_m, m) + psi * catapult_height(theta, dom_v, m))


def _jhat_counts(theta, n_m: int, n_v: int, doms, m: float):
    dom_m, dom_v = doms
    n = n_m + n_v
    return -(n_m * catapult_height(theta, dom_m, m) + n_v * catapult_height(theta, dom_v, m)) / n


@dataclass(frozen=True)
class CatapultStudyConfig:
    """Monte-Carlo study settings; defaults reproduce the reference setup."""

    m: float = 1.0
    psi: float = 0.7
    sigma_theta: float = 0.15
    n_grid: tuple[int, ...] = (1, 2, 5, 10, 20, 30)
    n_seeds: int = 100
    doms: tuple[CatapultDomain, CatapultDomain] = (MARS, VENUS)

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError("mass must be positive")
        if self.sigma_theta < 0:
            raise ValueError("sigma_theta must be nonnegative")
        grid = tuple(int(n) for n in self.n_grid)
        if len(grid) == 0 or grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be strictly increasing positive integers")
        object.__setattr__(self, "n_grid", grid)
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be >= 1")


@dataclass
class CatapultStudyResult:
    """Per-seed samples and per-n summaries of the bias study.

    For every (n, seed) the study draws a training sample of n planets with
    optimum theta*_n, perturbs it into the candidate theta_c, and draws an
    independent reference sample of n planets whose own optimum serves as
    the comparison solution.  Estimated-gap samples therefore come from the
    reference sample, while the within-sample trio (J_opt_n, J_cand,
    J_true_opt) is evaluated on the training sample.
    """

    config: CatapultStudyConfig
    seed: int
    per_n: dict[int, dict[str, np.ndarray]] = field(default_factory=dict)

    CSV_COLUMNS = ("n", "mean_J_opt_n", "std_J_opt_n", "mean_J_cand", "std_J_cand",
                   "mean_J_true_opt", "mean_OG", "std_OG", "mean_OGhat", "std_OGhat", "SOB")

    @property
    def j_true_opt(self) -> float:
        cfg = self.config
        return catapult_J(catapult_true_opt(cfg.psi, cfg.doms), cfg.psi, cfg.doms, cfg.m)

    def row(self, n: int) -> dict[str, float]:
        d = self.per_n[n]
        return {
            "n": n,
            "mean_J_opt_n": float(d["J_opt_n"].mean()),
            "std_J_opt_n": float(d["J_opt_n"].std()),
            "mean_J_cand": float(d["J_cand"].mean()),
            "std_J_cand": float(d["J_cand"].std()),
            "mean_J_true_opt": float(d["J_true_opt"].mean()),
            "mean_OG": float(d["OG"].mean()),
            "std_OG": float(d["OG"].std()),
            "mean_OGhat": float(d["OGhat"].mean()),
            "std_OGhat": float(d["OGhat"].std()),
            "SOB": float(d["J_opt_n"].mean() - self.j_true_opt),
        }

    def rows(self) -> list[dict[str, float]]:
        return [self.row(n) for n in self.config.n_grid]


def catapult_study(config: CatapultStudyConfig, seed: int = 0) -> CatapultStudyResult:
    """Run the bias study over the sample-size grid.

    Per (n, seed) draw: training planets -> theta*_n and the within-sample
    returns; candidate theta_c ~ N(theta*_n, sigma_theta^2); independent
    reference planets -> estimated gap  Jhat_ref(theta*_ref) -
    Jhat_ref(theta_c) >= 0;  true gap  J(theta*) - J(theta_c) from the
    psi-weighted expectation, so its spread stems from theta_c alone.
    """
    cfg = config
    theta_star = catapult_true_opt(cfg.psi, cfg.doms)
    result = CatapultStudyResult(config=cfg, seed=seed)
    for n in cfg.n_grid:
        rec = {key: np.empty(cfg.n_seeds) for key in
               ("J_opt_n", "J_cand", "J_true_opt", "OG", "OGhat")}
        for s in range(cfg.n_seeds):
            rng = stream(seed, "catapult-study", n, s)
            n_v = int(np.sum(rng.random(n) < cfg.psi))
            n_m = n - n_v
            theta_n = catapult_opt_policy(n_m, n_v, cfg.doms)
            theta_c = float(rng.normal(theta_n, cfg.sigma_theta))
            n_v_ref = int(np.sum(rng.random(n) < cfg.psi))
            n_m_ref = n - n_v_ref
            theta_ref = catapult_opt_policy(n_m_ref, n_v_ref, cfg.doms)

            rec["J_opt_n"][s] = _jhat_counts(theta_n, n_m, n_v, cfg.doms, cfg.m)
            rec["J_cand"][s] = _jhat_counts(theta_c, n_m, n_v, cfg.doms, cfg.m)
            rec["J_true_opt"][s] = _jhat_counts(theta_star, n_m, n_v, cfg.doms, cfg.m)
            rec["OG"][s] = result.j_true_opt - catapult_J(theta_c, cfg.psi, cfg.doms, cfg.m)
            rec["OGhat"][s] = (_jhat_counts(theta_ref, n_m_ref, n_v_ref, cfg.doms, cfg.m)
                               - _jhat_counts(theta_c, n_m_ref, n_v_ref, cfg.doms, cfg.m))
        result.per_n[n] = rec
    return result
