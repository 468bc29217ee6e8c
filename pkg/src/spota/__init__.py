"""Domain-randomized policy search with an optimality-gap stopping criterion.

The package trains policies over distributions of simulated physics,
estimates an upper confidence bound on the optimality gap (UCBOG) by
comparing the candidate against freshly trained reference solutions, and
stops once the bound drops below a threshold of trust.  An analytic
two-planet catapult makes the underlying bias quantities exactly checkable.
"""
from .catapult import (
    MARS,
    VENUS,
    CatapultDomain,
    CatapultStudyConfig,
    CatapultStudyResult,
    catapult_height,
    catapult_J,
    catapult_Jhat,
    catapult_opt_policy,
    catapult_study,
    catapult_true_opt,
)
from .config import ExperimentConfig, SweepSpec, default_config, load_config, save_config
from .core import (
    GapSampleSet,
    SpotaConfig,
    SpotaResult,
    UcbogReport,
    compare_solutions,
    nondecr_seq,
    reject_outliers,
    spota_run,
    train_candidate,
    train_references,
    ucbog,
)
from .domains import (
    DomainDistribution,
    DomainParamSet,
    DomainParamSpec,
    nominal_domain,
    sample_domain,
)
from .policy import PolicyArch, init_policy_params, policy_forward, reset_exploration
from .polopt import (
    Adam,
    PolOptSpec,
    RolloutBatch,
    cem_maximize,
    collect_batch,
    epopt_filter,
    gae_advantages,
    pol_opt_cem,
    pol_opt_clipped_pg,
)
from .rollout import Trajectory, discounted_return, estimate_return
from .tasks import CatapultTask, RlTask, catapult_distribution

__version__ = "0.1.0"
