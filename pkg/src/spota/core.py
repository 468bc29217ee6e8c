"""Candidate-vs-reference policy search with a bootstrapped gap bound.

The meta-loop trains a candidate policy on n_c sampled domains, then n_G
reference policies on fresh n_r-domain sets each, compares candidate and
references under synchronized random seeds, rejects negative gap estimates,
and bootstraps an upper confidence bound on the mean optimality gap
(UCBOG).  Training stops once the bound drops to the threshold of trust.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .domains import DomainDistribution, DomainParamSet, sample_domain
from .rng import derive_key, stream


def nondecr_seq(n0: int, k: int) -> int:
    """Sample-size schedule floor(n0 * (k+1)) for iteration k >= 0."""
    if n0 < 1 or k < 0:
        raise ValueError("need n0 >= 1 and k >= 0")
    return int(math.floor(n0 * (k + 1)))


@dataclass
class SpotaConfig:
    """Hyper-parameters of the meta-loop."""

    n_c_init: int = 5  # candidate domains at iteration 0
    n_r_init: int = 1  # reference domains at iteration 0
    n_G: int = 20  # reference solutions per iteration
    n_J: int = 50  # rollouts per return estimate
    n_b: int = 1000  # bootstrap replications
    alpha: float = 0.05  # one-sided confidence parameter
    beta: float = 60.0  # threshold of trust (return units)
    max_iterations: int = 10
    warm_start: bool = True  # initialize each candidate from the previous one

    def __post_init__(self):
        if min(self.n_c_init, self.n_r_init, self.n_G, self.n_J, self.n_b,
               self.max_iterations) < 1:
            raise ValueError("all counts must be >= 1")
        if not 0.0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 0.5)")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")


@dataclass
class GapSampleSet:
    """Nonnegative optimality-gap estimates, one per (reference, domain)."""

    samples: np.ndarray  # (n_G, n_r), entrywise >= 0 after rejection
    iteration: int = 0
    candidate_id: str = ""
    reference_ids: tuple[str, ...] = ()
    negative_fraction: float = 0.0  # fraction of raw entries below zero

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if not np.all(np.isfinite(self.samples)) or np.any(self.samples < 0):
            raise ValueError("gap samples must be finite and nonnegative")


@dataclass(frozen=True)
class UcbogReport:
    """Bootstrap summary of one iteration's gap samples."""

    mean_gap: float
    bootstrap_quantile: float
    ucbog: float
    alpha: float
    n_samples: int
    negative_fraction: float
    stop: bool


def reject_outliers(raw: np.ndarray, iteration: int = 0, candidate_id: str = "",
                    reference_ids: Sequence[str] = ()) -> GapSampleSet:
    """Replace negative gap estimates by better reference results, then clamp.

    For each negative entry (k, i) the other references k' != k are scanned
    in ascending order and the first strictly larger gap for domain i
    substitutes it (in place, so later scans see the update).  Entries that
    remain negative afterwards are clipped to the theoretical minimum zero.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2:
        raise ValueError("expected an n_G x n_r matrix")
    if not np.all(np.isfinite(raw)):
        raise ValueError("gap matrix must be finite")
    neg_frac = float(np.mean(raw < 0.0))
    g = raw.copy()
    n_g, n_r = g.shape
    for k in range(n_g):
        for i in range(n_r):
            if g[k, i] < 0.0:
                for kp in range(n_g):
                    if kp != k and g[kp, i] > g[k, i]:
                        g[k, i] = g[kp, i]
                        break
    np.maximum(g, 0.0, out=g)
    return GapSampleSet(samples=g, iteration=iteration, candidate_id=candidate_id,
                        reference_ids=tuple(reference_ids), negative_fraction=neg_frac)


def ucbog(gaps: GapSampleSet, n_b: int, alpha: float, seed: int,
          beta: float = math.inf) -> UcbogReport:
    """Basic-bootstrap upper confidence bound on the mean gap.

    Draws n_b uniform-with-replacement resamples of the flattened gap set,
    takes the empirical lower alpha-quantile of the resample means (linear
    interpolation between order statistics), and returns
    max(0, 2 * mean - quantile) together with the stop decision.
    """
    flat = gaps.samples.ravel()
    if flat.size < 2:
        raise ValueError("need at least 2 gap samples")
    if n_b < 100:
        raise ValueError("need at least 100 bootstrap replications")
    rng = stream(seed, "bootstrap")
    idx = rng.integers(0, flat.size, size=(n_b, flat.size))
    boot_means = flat[idx].mean(axis=1)
    q = float(np.quantile(boot_means, alpha))
    mean = float(flat.mean())
    bound = max(0.0, 2.0 * mean - q)
    return UcbogReport(mean_gap=mean, bootstrap_quantile=q, ucbog=bound, alpha=alpha,
                       n_samples=flat.size, negative_fraction=gaps.negative_fraction,
                       stop=bool(bound <= beta))


class SpotaTask(Protocol):
    """Environment/policy bundle the meta-loop is generic over."""

    def initial_policy(self, seed: int): ...

    def train(self, init_policy, domains: Sequence[DomainParamSet], seed: int): ...

    def reset_exploration(self, policy): ...

    def estimate_return(self, policy, xi: DomainParamSet, n_J: int, seed_base: int) -> float: ...


@dataclass
class ReferenceSolution:
    policy: object
    domains: list[DomainParamSet]
    trace: list = field(default_factory=list)


def train_candidate(task: SpotaTask, dist: DomainDistribution, n_c: int,
                    init_policy, seed: int):
    """Sample n_c i.i.d. domains and optimize the candidate on them."""
    rng = stream(seed, "candidate-domains")
    domains = [sample_domain(dist, rng) for _ in range(n_c)]
    policy, trace = task.train(init_policy, domains, derive_key(seed, "candidate-train"))
    return policy, domains, trace


def train_references(task: SpotaTask, dist: DomainDistribution, candidate, n_G: int,
                     n_r: int, seed: int) -> list[ReferenceSolution]:
    """Train n_G reference solutions on fresh domain sets.

    Each reference starts from the candidate parameters with the
    exploration strategy reset, and owns an independent seed path, so the
    results do not depend on execution order.
    """
    refs = []
    for k in range(n_G):
        rng = stream(seed, "reference-domains", k)
        domains = [sample_domain(dist, rng) for _ in range(n_r)]
        init = task.reset_exploration(candidate)
        policy, trace = task.train(init, domains, derive_key(seed, "reference-train", k))
        refs.append(ReferenceSolution(policy=policy, domains=domains, trace=trace))
    return refs


def compare_solutions(task: SpotaTask, candidate, references: Sequence[ReferenceSolution],
                      n_J: int, seed: int) -> np.ndarray:
    """Raw gap matrix from paired candidate/reference evaluations.

    Entry (k, i) estimates the return of reference k minus the candidate on
    the reference's i-th training domain; both estimates reuse the same
    seed path, hence identical initial states and noise streams, and a
    policy compared against itself yields exactly zero.
    """
    n_g = len(references)
    n_r = len(references[0].domains) if n_g else 0
    raw = np.empty((n_g, n_r))
    for k, ref in enumerate(references):
        if len(ref.domains) != n_r:
            raise ValueError("references must share the same domain count")
        for i, xi in enumerate(ref.domains):
            seed_base = derive_key(seed, "compare", k, i)
            j_ref = task.estimate_return(ref.policy, xi, n_J, seed_base)
            j_cand = task.estimate_return(candidate, xi, n_J, seed_base)
            raw[k, i] = j_ref - j_cand
    return raw


@dataclass
class IterationRecord:
    iteration: int
    n_c: int
    n_r: int
    report: UcbogReport
    candidate_trace: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "n_c": self.n_c,
            "n_r": self.n_r,
            "mean_gap": self.report.mean_gap,
            "q_alpha": self.report.bootstrap_quantile,
            "ucbog": self.report.ucbog,
            "negative_fraction": self.report.negative_fraction,
            "stop": self.report.stop,
        }


@dataclass
class SpotaResult:
    policy: object
    records: list[IterationRecord]
    converged: bool  # True when the UCBOG threshold triggered the stop

    @property
    def iterations(self) -> int:
        return len(self.records)


def spota_run(config: SpotaConfig, dist: DomainDistribution, task: SpotaTask,
              seed: int) -> SpotaResult:
    """Full meta-loop: candidate, references, comparison, rejection, bound.

    Sample sizes n_c and n_r advance along the nondecreasing schedule
    between iterations; the loop ends when the UCBOG falls to the threshold
    of trust or the iteration budget is exhausted (flagged, not an error).
    The returned policy is the last candidate.
    """
    policy = task.initial_policy(derive_key(seed, "policy-init"))
    records: list[IterationRecord] = []
    converged = False
    for k in range(config.max_iterations):
        n_c = nondecr_seq(config.n_c_init, k)
        n_r = nondecr_seq(config.n_r_init, k)
        iter_seed = derive_key(seed, "iteration", k)
        init = policy if (config.warm_start or k == 0) else task.initial_policy(
            derive_key(seed, "policy-init", k))
        candidate, _, cand_trace = train_candidate(task, dist, n_c, init, iter_seed)
        references = train_references(task, dist, candidate, config.n_G, n_r, iter_seed)
        raw = compare_solutions(task, candidate, references, config.n_J, iter_seed)
        gaps = reject_outliers(raw, iteration=k, candidate_id=f"iter{k}-cand",
                               reference_ids=tuple(f"iter{k}-ref{j}" for j in range(config.n_G)))
        report = ucbog(gaps, config.n_b, config.alpha, derive_key(iter_seed, "ucbog"),
                       beta=config.beta)
        records.append(IterationRecord(iteration=k, n_c=n_c, n_r=n_r, report=report,
                                       candidate_trace=cand_trace))
        policy = candidate
        if report.stop:
            converged = True
            break
    return SpotaResult(policy=policy, records=records, converged=converged)
