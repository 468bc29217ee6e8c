"""Command-line entry points: catapult, train, sweep, report.

All numeric emissions format floats via repr(), so re-running a subcommand
with the same config and seed reproduces byte-identical outputs.
"""
from __future__ import annotations

import argparse
import csv
import json
from dataclasses import replace
from pathlib import Path

import numpy as np

from .catapult import CatapultStudyResult, catapult_study
from .config import ExperimentConfig, ConfigError, default_config, load_config
from .core import spota_run
from .domains import nominal_domain, sample_domain
from .policy import PolicyArch
from .rng import derive_key, rollout_streams, stream
from .rollout import mean_policy_act_fn, run_episodes
from .tasks import CatapultTask, RlTask

CATAPULT_CSV_COLUMNS = CatapultStudyResult.CSV_COLUMNS
TRACE_CSV_COLUMNS = ("iteration", "n_c", "n_r", "mean_gap", "q_alpha", "ucbog",
                     "negative_fraction", "stop")
SWEEP_CSV_COLUMNS = ("parameter", "value", "nominal_value", "is_nominal",
                     "mean_return", "std_return", "n_rollouts")
POLOPT_TRACE_COLUMNS = ("iteration", "mean_return", "std_return")


def _fmt(value) -> str:
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return "1" if value else "0"
    if isinstance(value, float) or isinstance(value, np.floating):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_policy(path: Path, policy, arch: PolicyArch | None) -> None:
    """Text format: one header line (architecture, dims), then flat parameters."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if arch is None:
            fh.write("scalar dim=1\n")
            fh.write(repr(float(policy)) + "\n")
        else:
            hidden = ",".join(str(h) for h in arch.hidden)
            fh.write(f"tanh-mlp state_dim={arch.state_dim} action_dim={arch.action_dim} "
                     f"hidden={hidden}\n")
            for value in np.asarray(policy, dtype=float):
                fh.write(repr(float(value)) + "\n")


def load_policy(path: Path):
    """Returns (policy, arch); arch is None for scalar policies."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        values = [float(line) for line in fh if line.strip()]
    if not header:
        raise ValueError(f"{path}: empty policy file")
    if header[0] == "scalar":
        return values[0], None
    if header[0] != "tanh-mlp":
        raise ValueError(f"{path}: unknown policy format {header[0]!r}")
    kv = dict(part.split("=", 1) for part in header[1:])
    arch = PolicyArch(state_dim=int(kv["state_dim"]), action_dim=int(kv["action_dim"]),
                      hidden=tuple(int(h) for h in kv["hidden"].split(",")))
    theta = np.asarray(values)
    if theta.size != arch.n_params:
        raise ValueError(f"{path}: expected {arch.n_params} parameters, found {theta.size}")
    return theta, arch


def cmd_catapult(cfg: ExperimentConfig) -> Path:
    """Run the bias study and emit its CSV."""
    if cfg.env != "catapult":
        raise ConfigError("the catapult subcommand requires env name 'catapult'")
    result = catapult_study(cfg.catapult, seed=cfg.seed)
    out = Path(cfg.out_dir) / "catapult_study.csv"
    write_csv(out, CATAPULT_CSV_COLUMNS, result.rows())
    return out


def _train_baseline(cfg: ExperimentConfig, task, nominal_only: bool):
    dist = cfg.distribution
    if nominal_only:
        domains = [nominal_domain(dist)]
    else:
        rng = stream(cfg.seed, "baseline-domains")
        domains = [sample_domain(dist, rng) for _ in range(cfg.spota.n_c_init)]
    init = task.initial_policy(derive_key(cfg.seed, "policy-init"))
    return task.train(init, domains, derive_key(cfg.seed, "baseline-train"))


def cmd_train(cfg: ExperimentConfig) -> dict[str, Path]:
    """Train a policy with the configured method and emit policy + traces."""
    if cfg.method not in ("spota", "baseline-nominal", "baseline-epopt"):
        raise ConfigError(f"unknown training method {cfg.method!r}")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    task = cfg.task()
    arch = task.arch if isinstance(task, RlTask) else None
    outputs: dict[str, Path] = {}

    if cfg.method == "spota":
        result = spota_run(cfg.spota, cfg.distribution, task, cfg.seed)
        policy = result.policy
        trace_rows = [rec.as_dict() for rec in result.records]
        outputs["ucbog_trace_csv"] = out_dir / "ucbog_trace.csv"
        write_csv(outputs["ucbog_trace_csv"], TRACE_CSV_COLUMNS, trace_rows)
        outputs["ucbog_trace_json"] = out_dir / "ucbog_trace.json"
        write_json(outputs["ucbog_trace_json"],
                   {"records": trace_rows, "converged": result.converged,
                    "iterations": result.iterations, "seed": cfg.seed})
        cand_rows = [
            {"spota_iteration": rec.iteration, "iteration": it,
             "mean_return": mean, "std_return": std}
            for rec in result.records for (it, mean, std) in rec.candidate_trace
        ]
        outputs["polopt_trace"] = out_dir / "candidate_trace.csv"
        write_csv(outputs["polopt_trace"],
                  ("spota_iteration",) + POLOPT_TRACE_COLUMNS, cand_rows)
    else:
        if cfg.method == "baseline-epopt" and cfg.polopt.cvar_epsilon is None:
            cfg.polopt = replace(cfg.polopt, cvar_epsilon=0.2)
            task = cfg.task()
        policy, trace = _train_baseline(cfg, task, cfg.method == "baseline-nominal")
        rows = [{"iteration": it, "mean_return": m, "std_return": s} for (it, m, s) in trace]
        outputs["polopt_trace"] = out_dir / "polopt_trace.csv"
        write_csv(outputs["polopt_trace"], POLOPT_TRACE_COLUMNS, rows)

    outputs["policy"] = out_dir / "policy.txt"
    save_policy(outputs["policy"], policy, arch)
    return outputs


def cmd_sweep(cfg: ExperimentConfig, policy_paths) -> list[Path]:
    """Evaluate policies over a one-parameter grid, all else nominal.

    Every policy at every grid point is evaluated under identical
    initial-state seed paths; sim-to-sim sweeps run without observation
    noise.  The nominal parameter value is marked in the emitted CSV.
    """
    if cfg.env == "catapult":
        raise ConfigError("sweeps require a simulated environment (qcp or qbb)")
    sweep = cfg.sweep
    if sweep.parameter not in cfg.distribution.names:
        raise ConfigError(f"unknown sweep parameter {sweep.parameter!r}")
    family = cfg.family()
    family.settings.obs_noise = False
    base = nominal_domain(cfg.distribution)
    nominal_value = base[sweep.parameter]
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for path in policy_paths:
        policy, arch = load_policy(Path(path))
        if arch is None or arch.state_dim != family.state_dim:
            raise ConfigError(f"{path}: policy does not match environment {cfg.env!r}")
        act_fn = mean_policy_act_fn(arch, policy)
        rows = []
        for idx, value in enumerate(sweep.values):
            xi = base.with_value(sweep.parameter, value)
            seed_base = derive_key(cfg.seed, "sweep", sweep.parameter, idx)
            env = family.make(xi, batch=sweep.rollouts)
            streams = rollout_streams([(seed_base, j) for j in range(sweep.rollouts)])
            returns = run_episodes(env, act_fn, streams, cfg.polopt.gamma)
            rows.append({
                "parameter": sweep.parameter,
                "value": float(value),
                "nominal_value": float(nominal_value),
                "is_nominal": bool(value == nominal_value),
                "mean_return": float(np.mean(returns)),
                "std_return": float(np.std(returns)),
                "n_rollouts": sweep.rollouts,
            })
        out = out_dir / f"sweep_{sweep.parameter}_{Path(path).stem}.csv"
        write_csv(out, SWEEP_CSV_COLUMNS, rows)
        written.append(out)
    return written


def cmd_report(trace_paths, out_dir: str) -> Path:
    """Aggregate UCBOG traces across runs into a summary JSON."""
    if not trace_paths:
        raise ValueError("need at least one trace file")
    traces = []
    for path in trace_paths:
        with open(path, "r", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        traces.append(rows)
    schedule = [(r["iteration"], r["n_c"], r["n_r"]) for r in traces[0]]
    for path, rows in zip(trace_paths, traces):
        if [(r["iteration"], r["n_c"], r["n_r"]) for r in rows] != schedule:
            raise ValueError(f"{path}: trace schedule differs from {trace_paths[0]}")
    ucbogs = np.array([[float(r["ucbog"]) for r in rows] for rows in traces])
    mean_trace = ucbogs.mean(axis=0)
    summary = {
        "iterations": [int(i) for (i, _, _) in schedule],
        "n_c": [int(c) for (_, c, _) in schedule],
        "n_r": [int(r) for (_, _, r) in schedule],
        "mean_ucbog": [float(v) for v in mean_trace],
        "std_ucbog": [float(v) for v in ucbogs.std(axis=0)],
        "n_runs": len(traces),
        "nonincreasing": bool(np.all(np.diff(mean_trace) <= 1e-12)),
    }
    out = Path(out_dir) / "report.json"
    write_json(out, summary)
    return out


def _load_or_default(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else default_config(
        "catapult" if args.command == "catapult" else "qcp")
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    if getattr(args, "method", None):
        cfg.method = args.method
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spota",
                                     description="Domain-randomized policy search "
                                                 "with an optimality-gap stopping criterion")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, default=None, help="INI config file")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        p.add_argument("--out", type=str, default=None, help="output directory")

    p_cat = sub.add_parser("catapult", help="run the analytic bias study")
    common(p_cat)

    p_train = sub.add_parser("train", help="train a policy")
    common(p_train)
    p_train.add_argument("--method", choices=("spota", "baseline-nominal", "baseline-epopt"),
                         default=None)

    p_sweep = sub.add_parser("sweep", help="one-parameter robustness sweep")
    common(p_sweep)
    p_sweep.add_argument("--policy", action="append", required=True,
                         help="policy file (repeatable)")

    p_rep = sub.add_parser("report", help="aggregate UCBOG traces")
    p_rep.add_argument("traces", nargs="+", help="ucbog_trace.csv files")
    p_rep.add_argument("--out", type=str, default=".")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "report":
        out = cmd_report(args.traces, args.out)
        print(out)
        return 0
    cfg = _load_or_default(args)
    if args.command == "catapult":
        print(cmd_catapult(cfg))
    elif args.command == "train":
        for path in cmd_train(cfg).values():
            print(path)
    elif args.command == "sweep":
        for path in cmd_sweep(cfg, args.policy):
            print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
