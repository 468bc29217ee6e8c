"""Domain parameter distributions and sampling.

A "domain" is one concrete physics instance (masses, frictions, delays...).
Each parameter carries its own univariate distribution plus hard support
bounds that keep sampled values physically plausible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

KINDS = ("normal", "uniform", "two-point", "point")

#: rejection attempts before falling back to clamping onto the support
MAX_RESAMPLE_TRIES = 100


@dataclass(frozen=True)
class DomainParamSpec:
    """Distribution of a single domain parameter.

    ``params`` depends on ``kind``:
      normal    -- (mean, std)
      uniform   -- (lo, hi); accepted in either order and sorted
      two-point -- (value_a, value_b, prob_b)
      point     -- (value,)

    ``support`` is a hard (min, max) clamp applied to every emitted value.
    """

    name: str
    kind: str
    params: tuple
    support: tuple = (-math.inf, math.inf)
    units: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r} for {self.name!r}")
        params = tuple(float(p) for p in self.params)
        if self.kind == "normal":
            if len(params) != 2 or params[1] < 0:
                raise ValueError(f"{self.name}: normal needs (mean, std) with std >= 0")
        elif self.kind == "uniform":
            if len(params) != 2:
                raise ValueError(f"{self.name}: uniform needs (lo, hi)")
            params = (min(params), max(params))
        elif self.kind == "two-point":
            if len(params) != 3 or not 0.0 <= params[2] <= 1.0:
                raise ValueError(f"{self.name}: two-point needs (value_a, value_b, prob_b in [0,1])")
        elif self.kind == "point":
            if len(params) != 1:
                raise ValueError(f"{self.name}: point needs (value,)")
        object.__setattr__(self, "params", params)
        support = (float(self.support[0]), float(self.support[1]))
        if support[0] > support[1]:
            raise ValueError(f"{self.name}: support min {support[0]} > max {support[1]}")
        object.__setattr__(self, "support", support)

    def clamp(self, value: float) -> float:
        return min(max(value, self.support[0]), self.support[1])

    def in_support(self, value: float) -> bool:
        return self.support[0] <= value <= self.support[1]

    def draw(self, rng: np.random.Generator) -> float:
        """One sample, rejection-resampled into the support, clamped as last resort."""
        for _ in range(MAX_RESAMPLE_TRIES):
            v = self._draw_raw(rng)
            if self.in_support(v):
                return v
        return self.clamp(v)

    def _draw_raw(self, rng: np.random.Generator) -> float:
        p = self.params
        if self.kind == "normal":
            return float(rng.normal(p[0], p[1]))
        if self.kind == "uniform":
            return float(rng.uniform(p[0], p[1]))
        if self.kind == "two-point":
            return p[1] if rng.random() < p[2] else p[0]
        return p[0]  # point

    def nominal(self) -> float:
        """Nominal value: mean / midpoint / majority value / the point value."""
        p = self.params
        if self.kind == "normal":
            v = p[0]
        elif self.kind == "uniform":
            v = 0.5 * (p[0] + p[1])
        elif self.kind == "two-point":
            v = p[1] if p[2] > 0.5 else p[0]
        else:
            v = p[0]
        return self.clamp(v)


@dataclass(frozen=True)
class DomainParamSet:
    """One sampled domain: a mapping from parameter name to value."""

    values: Mapping[str, float]

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def __contains__(self, name: str) -> bool:
        return name in self.values

    def __iter__(self) -> Iterator[str]:
        return iter(self.values)

    def with_value(self, name: str, value: float) -> "DomainParamSet":
        if name not in self.values:
            raise KeyError(f"unknown domain parameter {name!r}")
        updated = dict(self.values)
        updated[name] = float(value)
        return DomainParamSet(updated)

    def as_dict(self) -> dict[str, float]:
        return dict(self.values)


@dataclass(frozen=True)
class DomainDistribution:
    """Ordered collection of independent parameter distributions."""

    specs: tuple[DomainParamSpec, ...]

    def __post_init__(self):
        specs = tuple(self.specs)
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise ValueError("duplicate domain parameter names")
        object.__setattr__(self, "specs", specs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.specs)

    def spec(self, name: str) -> DomainParamSpec:
        for s in self.specs:
            if s.name == name:
                return s
        raise KeyError(f"unknown domain parameter {name!r}")

    def replace_spec(self, spec: DomainParamSpec) -> "DomainDistribution":
        if spec.name in self.names:
            return DomainDistribution(tuple(spec if s.name == spec.name else s for s in self.specs))
        return DomainDistribution(self.specs + (spec,))

    def validate_set(self, ps: DomainParamSet) -> None:
        if set(ps.values) != set(self.names):
            missing = set(self.names) - set(ps.values)
            extra = set(ps.values) - set(self.names)
            raise ValueError(f"domain parameter set mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        for s in self.specs:
            if not s.in_support(ps[s.name]):
                raise ValueError(f"{s.name}={ps[s.name]} outside support {s.support}")


def sample_domain(dist: DomainDistribution, rng: np.random.Generator) -> DomainParamSet:
    """Draw one domain, each parameter independently, in declaration order."""
    return DomainParamSet({s.name: s.draw(rng) for s in dist.specs})


def nominal_domain(dist: DomainDistribution) -> DomainParamSet:
    """The nominal (unrandomized) domain of a distribution."""
    return DomainParamSet({s.name: s.nominal() for s in dist.specs})
