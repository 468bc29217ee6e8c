"""Experiment configuration: INI-style files with strict key validation.

Sections: [env], [distribution.<param>], [polopt], [spota], [sweep].
Every key is validated against the schema; unknown keys are rejected with
the offending key and line named.  Values omitted in the file fall back to
the per-environment defaults (hyper-parameters, domain tables, reward
weights), so an empty file is a complete default experiment.
"""
from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, fields, replace

from .catapult import CatapultStudyConfig
from .core import SpotaConfig
from .domains import DomainDistribution, DomainParamSpec
from .envs.ballbalancer import BallBalancerFamily, BallBalancerSettings
from .envs.cartpole import CartPoleFamily, CartPoleSettings
from .polopt import PolOptSpec
from .tasks import CatapultTask, RlTask, catapult_distribution

ENV_NAMES = ("qcp", "qbb", "catapult")
METHODS = ("spota", "baseline-nominal", "baseline-epopt")


class ConfigError(ValueError):
    pass


@dataclass
class SweepSpec:
    """One-parameter robustness sweep over a fixed value grid."""

    parameter: str = "act_delay"
    values: tuple[float, ...] = (0.0, 2.0, 5.0, 8.0, 10.0)
    rollouts: int = 50

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if len(values) == 0 or not all(math.isfinite(v) for v in values):
            raise ConfigError("sweep values must be a nonempty finite grid")
        object.__setattr__(self, "values", values)
        if self.rollouts < 1:
            raise ConfigError("sweep rollouts must be >= 1")


@dataclass
class ExperimentConfig:
    """Fully resolved experiment description."""

    env: str = "qcp"
    method: str = "spota"
    seed: int = 0
    out_dir: str = "."
    env_settings: object = None  # CartPoleSettings | BallBalancerSettings | None
    catapult: CatapultStudyConfig = field(default_factory=CatapultStudyConfig)
    distribution: DomainDistribution = None
    polopt: PolOptSpec = field(default_factory=PolOptSpec)
    spota: SpotaConfig = field(default_factory=SpotaConfig)
    sweep: SweepSpec = field(default_factory=SweepSpec)

    def family(self):
        if self.env == "qcp":
            return CartPoleFamily(settings=self.env_settings)
        if self.env == "qbb":
            return BallBalancerFamily(settings=self.env_settings)
        raise ConfigError("the catapult task has no simulated environment family")

    def task(self):
        if self.env == "catapult":
            return CatapultTask(spec=self.polopt, doms=self.catapult.doms, m=self.catapult.m)
        return RlTask(family=self.family(), spec=self.polopt)


# per-env hyper-parameter defaults: rollouts per estimate and trust threshold
_SPOTA_ENV_DEFAULTS = {
    "qbb": {"n_J": 120, "beta": 50.0},
    "qcp": {"n_J": 50, "beta": 60.0},
    "catapult": {"n_J": 1, "beta": 1.0},
}

_ENV_KEYS = {
    "name": str,
    "dt": float,
    "horizon": int,
    "action_limit": float,
    "obs_noise": bool,
    "r_min": float,
    "init_radius": float,
    "init_angle_std": float,
    # catapult-study settings
    "mass": float,
    "psi": float,
    "sigma_theta": float,
    "n_grid": "int_list",
    "n_seeds": int,
}
_POLOPT_KEYS = {f.name: f.type for f in fields(PolOptSpec)}
_SPOTA_KEYS = {f.name: f.type for f in fields(SpotaConfig)}
_SWEEP_KEYS = {"parameter": str, "values": "float_list", "rollouts": int}
_DIST_KEYS = {"kind": str, "mean": float, "std": float, "low": float, "high": float,
              "value_a": float, "value_b": float, "prob_b": float, "value": float,
              "support_low": float, "support_high": float}


def _parse_value(raw: str, kind):
    raw = raw.strip()
    if kind in (bool, "bool") or kind == "bool":
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}")
    if kind in (int, "int"):
        return int(raw)
    if kind in (float, "float") or kind == "float | None":
        return float(raw)
    if kind == "int_list":
        return tuple(int(v) for v in raw.replace(",", " ").split())
    if kind == "float_list":
        return tuple(float(v) for v in raw.replace(",", " ").split())
    return raw


def _key_line(text: str, section: str, key: str) -> str:
    """Best-effort 'line N' context for error messages."""
    current = None
    for ln, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1]
        elif current == section and stripped.split("=")[0].strip() == key:
            return f" (line {ln})"
    return ""


def _coerce_section(parser, section: str, schema: dict, text: str) -> dict:
    out = {}
    for key, raw in parser.items(section):
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} in section [{section}]"
                              f"{_key_line(text, section, key)}")
        try:
            out[key] = _parse_value(raw, schema[key])
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r} in section [{section}]"
                              f"{_key_line(text, section, key)}: {exc}") from exc
    return out


def _spec_from_keys(name: str, keys: dict, base: DomainParamSpec | None) -> DomainParamSpec:
    kind = keys.get("kind", base.kind if base else None)
    if kind is None:
        raise ConfigError(f"[distribution.{name}] needs a 'kind'")
    if kind == "normal":
        params = (keys.get("mean", base.params[0] if base and base.kind == kind else None),
                  keys.get("std", base.params[1] if base and base.kind == kind else None))
    elif kind == "uniform":
        params = (keys.get("low", base.params[0] if base and base.kind == kind else None),
                  keys.get("high", base.params[1] if base and base.kind == kind else None))
    elif kind == "two-point":
        old = base.params if base and base.kind == kind else (None, None, None)
        params = (keys.get("value_a", old[0]), keys.get("value_b", old[1]),
                  keys.get("prob_b", old[2]))
    elif kind == "point":
        params = (keys.get("value", base.params[0] if base and base.kind == kind else None),)
    else:
        raise ConfigError(f"[distribution.{name}] has unknown kind {kind!r}")
    if any(p is None for p in params):
        raise ConfigError(f"[distribution.{name}] is missing parameters for kind {kind!r}")
    support = (keys.get("support_low", base.support[0] if base else -math.inf),
               keys.get("support_high", base.support[1] if base else math.inf))
    units = base.units if base else ""
    return DomainParamSpec(name, kind, params, support, units)


def default_config(env: str = "qcp") -> ExperimentConfig:
    """Fully populated defaults for the named environment."""
    if env not in ENV_NAMES:
        raise ConfigError(f"unknown environment {env!r}; expected one of {ENV_NAMES}")
    cfg = ExperimentConfig(env=env)
    cfg.spota = replace(cfg.spota, **_SPOTA_ENV_DEFAULTS[env])
    if env == "qcp":
        cfg.env_settings = CartPoleSettings()
        cfg.distribution = CartPoleFamily().default_distribution()
    elif env == "qbb":
        cfg.env_settings = BallBalancerSettings()
        cfg.distribution = BallBalancerFamily().default_distribution()
    else:
        cfg.env_settings = None
        cfg.catapult = CatapultStudyConfig()
        cfg.distribution = catapult_distribution(cfg.catapult.psi)
        cfg.polopt = replace(cfg.polopt, method="exact")
    return cfg


def loads_config(text: str) -> ExperimentConfig:
    """Parse a config from its text; see load_config."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case-sensitive (n_J, n_G, ...)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    known = {"env", "polopt", "spota", "sweep"}
    for section in parser.sections():
        if section not in known and not section.startswith("distribution."):
            raise ConfigError(f"unknown section [{section}]")

    env_keys = _coerce_section(parser, "env", _ENV_KEYS, text) if parser.has_section("env") else {}
    env = env_keys.pop("name", "qcp")
    cfg = default_config(env)

    # environment settings and catapult-study settings
    study_keys = {k: env_keys.pop(k) for k in ("mass", "psi", "sigma_theta", "n_grid", "n_seeds")
                  if k in env_keys}
    if env == "catapult":
        rename = {"mass": "m"}
        cfg.catapult = replace(cfg.catapult, **{rename.get(k, k): v for k, v in study_keys.items()})
        cfg.distribution = catapult_distribution(cfg.catapult.psi)
        if env_keys:
            raise ConfigError(f"keys {sorted(env_keys)} in [env] do not apply to the catapult")
    else:
        if study_keys:
            raise ConfigError(f"keys {sorted(study_keys)} in [env] only apply to the catapult")
        valid = {f.name for f in fields(type(cfg.env_settings))}
        for key in env_keys:
            if key not in valid:
                raise ConfigError(f"key {key!r} in [env] does not apply to environment {env!r}")
        cfg.env_settings = replace(cfg.env_settings, **env_keys)

    if parser.has_section("polopt"):
        cfg.polopt = replace(cfg.polopt, **_coerce_section(parser, "polopt", _POLOPT_KEYS, text))
    if parser.has_section("spota"):
        cfg.spota = replace(cfg.spota, **_coerce_section(parser, "spota", _SPOTA_KEYS, text))
    if parser.has_section("sweep"):
        sweep_keys = _coerce_section(parser, "sweep", _SWEEP_KEYS, text)
        cfg.sweep = replace(cfg.sweep, **sweep_keys)

    for section in parser.sections():
        if section.startswith("distribution."):
            name = section[len("distribution."):]
            keys = _coerce_section(parser, section, _DIST_KEYS, text)
            base = cfg.distribution.spec(name) if name in cfg.distribution.names else None
            cfg.distribution = cfg.distribution.replace_spec(_spec_from_keys(name, keys, base))

    if cfg.sweep.parameter not in cfg.distribution.names:
        # only enforced when a sweep section was given explicitly
        if parser.has_section("sweep"):
            raise ConfigError(f"sweep parameter {cfg.sweep.parameter!r} is not in the "
                              f"domain distribution")
    return cfg


def load_config(path: str) -> ExperimentConfig:
    """Load and validate a config file; an empty file yields full defaults."""
    with open(path, "r", encoding="utf-8") as fh:
        return loads_config(fh.read())


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def dumps_config(cfg: ExperimentConfig) -> str:
    """Serialize a fully resolved config; loads_config round-trips it."""
    out = io.StringIO()
    out.write("[env]\n")
    out.write(f"name = {cfg.env}\n")
    if cfg.env == "catapult":
        c = cfg.catapult
        for key, val in (("mass", c.m), ("psi", c.psi), ("sigma_theta", c.sigma_theta),
                         ("n_grid", c.n_grid), ("n_seeds", c.n_seeds)):
            out.write(f"{key} = {_fmt(val)}\n")
    else:
        for f in fields(type(cfg.env_settings)):
            if f.name in _ENV_KEYS:
                out.write(f"{f.name} = {_fmt(getattr(cfg.env_settings, f.name))}\n")
    out.write("\n[polopt]\n")
    for f in fields(PolOptSpec):
        val = getattr(cfg.polopt, f.name)
        if val is not None:
            out.write(f"{f.name} = {_fmt(val)}\n")
    out.write("\n[spota]\n")
    for f in fields(SpotaConfig):
        out.write(f"{f.name} = {_fmt(getattr(cfg.spota, f.name))}\n")
    out.write("\n[sweep]\n")
    for f in fields(SweepSpec):
        out.write(f"{f.name} = {_fmt(getattr(cfg.sweep, f.name))}\n")
    if cfg.env != "catapult":
        for s in cfg.distribution.specs:
            out.write(f"\n[distribution.{s.name}]\n")
            out.write(f"kind = {s.kind}\n")
            if s.kind == "normal":
                out.write(f"mean = {_fmt(s.params[0])}\nstd = {_fmt(s.params[1])}\n")
            elif s.kind == "uniform":
                out.write(f"low = {_fmt(s.params[0])}\nhigh = {_fmt(s.params[1])}\n")
            elif s.kind == "two-point":
                out.write(f"value_a = {_fmt(s.params[0])}\nvalue_b = {_fmt(s.params[1])}\n"
                          f"prob_b = {_fmt(s.params[2])}\n")
            else:
                out.write(f"value = {_fmt(s.params[0])}\n")
            out.write(f"support_low = {_fmt(s.support[0])}\n")
            out.write(f"support_high = {_fmt(s.support[1])}\n")
    return out.getvalue()


def save_config(cfg: ExperimentConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_config(cfg))
