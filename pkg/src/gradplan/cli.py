"""Experiment harness: configure a run, plan, and emit machine-readable results.

Outputs per run directory:

* ``curve.csv``      -- epoch,loss,best_value,wall_ms (best_value is best-so-far)
* ``plan.json``      -- best instance, value, its H x dim action array, domain
                        metadata and seed; byte-stable for a fixed config+seed
* ``summary.json``   -- resolved config echo, engine, timings, final value

Config precedence: built-in defaults < config file < command-line flags.
The config file is flat ``key = value`` text; dotted keys override domain
parameters (e.g. ``reservoir.rain = 12``).  Exit codes: 0 success, 2 config
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import engines
from .baselines import heuristic_rollout
from .domains import default_params, make_domain
from .errors import ConfigError, GradplanError, NumericalError
from .optimizers import OPTIMIZERS
from .planner import PlannerConfig, RolloutGraph, init_actions, plan

_CONFIG_DEFAULTS = {
    "domain": None,
    "optimizer": "rmsprop",
    "rate": 0.01,
    "epochs": 1000,
    "batch": 100,
    "horizon": None,
    "seed": 0,
    "epsilon": None,
    "tol": 1e-6,
    "patience": 200,
    "workers": None,
    "out": "runs",
    "heuristic": False,
}


@dataclass
class RunConfig:
    domain: str
    optimizer: str = "rmsprop"
    rate: float = 0.01
    epochs: int = 1000
    batch: int = 100
    horizon: int | None = None
    seed: int = 0
    epsilon: float | None = None
    tol: float = 1e-6
    patience: int = 200
    workers: int = 1
    out: str = "runs"
    heuristic: bool = False
    overrides: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if not self.domain:
            raise ConfigError("missing required key: domain")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(
                f"unknown optimizer {self.optimizer!r}; expected one of {sorted(OPTIMIZERS)}"
            )
        if not self.rate > 0:
            raise ConfigError(f"rate out of range: {self.rate} (must be > 0)")
        for key in ("epochs",):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} out of range: {getattr(self, key)}")
        for key in ("batch", "patience", "workers"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} out of range: {getattr(self, key)}")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigError(f"horizon out of range: {self.horizon}")


@dataclass
class RunOutputs:
    curve_path: Path
    plan_path: Path | None
    summary_path: Path
    results: dict


def _convert_like(default, text: str, key: str):
    """Parse ``text`` with the type of the parameter's default value."""
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"malformed boolean for {key!r}: {text}")
    try:
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"malformed value for {key!r}: {text}") from None
    if isinstance(default, str):
        return text
    raise ConfigError(f"parameter {key!r} is not settable from config")


def _parse_domain_override(domain: str, key: str, text: str):
    family = domain.split("-", 1)[0]
    prefix, _, param = key.partition(".")
    if prefix != family:
        raise ConfigError(
            f"override {key!r} does not match domain {domain!r} (expected prefix {family!r})"
        )
    defaults = default_params(domain)
    if not any(f.name == param for f in dataclasses.fields(defaults)) or param == "variant":
        raise ConfigError(f"unknown parameter {key!r} for domain {domain!r}")
    return param, _convert_like(getattr(defaults, param), text, key)


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    raw = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        raw[key.strip()] = value.strip()
    return raw


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gradplan",
        description="Plan hybrid control domains by backpropagation through the unrolled dynamics.",
    )
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--domain", help="domain name, e.g. nav-nonlinear, reservoir-linear, hvac")
    p.add_argument("--optimizer", help="sgd | rmsprop | adagrad | adadelta | adam")
    p.add_argument("--rate", type=float, help="optimization rate (eta)")
    p.add_argument("--epochs", type=int, help="epoch budget")
    p.add_argument("--batch", type=int, help="parallel problem instances N")
    p.add_argument("--horizon", type=int, help="decision steps H (domain default if omitted)")
    p.add_argument("--seed", type=int, help="run seed; fully determines the run")
    p.add_argument("--epsilon", type=float, help="optimizer epsilon override")
    p.add_argument("--tol", type=float, help="early-stop improvement tolerance")
    p.add_argument("--patience", type=int, help="early-stop patience in epochs")
    p.add_argument("--workers", type=int, help="worker cap (default $GRADPLAN_WORKERS or 1)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--heuristic", action="store_true", default=None,
                   help="include the domain heuristic comparator in the summary")
    p.add_argument("--compare-optimizers", dest="compare_optimizers",
                   help="comma-separated optimizer list; emits one curve per optimizer")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="domain parameter override, e.g. reservoir.rain=12")
    return p


def parse_config(argv=None):
    """Merge defaults, config file and flags (flags win) into a RunConfig.

    Returns (RunConfig, compare_optimizers list or None).
    """
    args = _build_parser().parse_args(argv)
    merged = dict(_CONFIG_DEFAULTS)
    override_texts: dict[str, str] = {}
    compare: str | None = None

    if args.config:
        for key, value in read_config_file(args.config).items():
            if "." in key:
                override_texts[key] = value
            elif key == "compare_optimizers":
                compare = value
            elif key in merged:
                default = _CONFIG_DEFAULTS[key]
                probe = {"horizon": 0, "epsilon": 0.0, "workers": 0, "domain": ""}.get(
                    key, default
                )
                merged[key] = _convert_like(probe, value, key)
            else:
                raise ConfigError(f"unknown config key: {key}")

    for key in merged:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    if args.compare_optimizers is not None:
        compare = args.compare_optimizers
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        override_texts[key.strip()] = value.strip()

    if merged["workers"] is None:
        env = os.environ.get("GRADPLAN_WORKERS", "").strip()
        try:
            merged["workers"] = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"malformed GRADPLAN_WORKERS: {env!r}") from None
    if not merged["domain"]:
        raise ConfigError("missing required key: domain")
    default_params(merged["domain"])  # validates the name early

    overrides = {}
    for key, text in override_texts.items():
        param, value = _parse_domain_override(merged["domain"], key, text)
        overrides[param] = value
    config = RunConfig(overrides=overrides, **merged)

    names = None
    if compare:
        names = [n.strip() for n in compare.split(",") if n.strip()]
    return config, names


def _planner_config(config: RunConfig, target_value=None) -> PlannerConfig:
    return PlannerConfig(
        instances=config.batch,
        horizon=config.horizon,
        epochs=config.epochs,
        optimizer=config.optimizer,
        rate=config.rate,
        epsilon=config.epsilon,
        seed=config.seed,
        tol=config.tol,
        patience=config.patience,
        workers=config.workers,
        target_value=target_value,
    )


def _prepare_out(config: RunConfig) -> Path:
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ConfigError(f"cannot create output directory {out}: {err}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return out


def _write_curve(path: Path, history):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "loss", "best_value", "wall_ms"])
        for h in history:
            writer.writerow(
                [h.epoch, repr(h.loss), repr(h.best_value), f"{h.wall_ms:.3f}"]
            )


def _config_echo(config: RunConfig) -> dict:
    echo = dataclasses.asdict(config)
    echo["engine"] = engines.engine_name()
    return echo


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2) + "\n")


def run(config: RunConfig) -> RunOutputs:
    """Execute one planning run and write curve.csv, plan.json, summary.json."""
    out = _prepare_out(config)
    spec = make_domain(config.domain, **config.overrides)
    horizon = config.horizon if config.horizon is not None else spec.default_horizon
    t0 = time.perf_counter()
    result = plan(spec, _planner_config(config))
    wall_ms = (time.perf_counter() - t0) * 1e3

    curve_path = out / "curve.csv"
    _write_curve(curve_path, result.history)

    lo, hi = spec.action_bounds[:, 0], spec.action_bounds[:, 1]
    if np.any(result.best_actions < lo) or np.any(result.best_actions > hi):
        raise GradplanError("plan violates action bounds at write time")
    plan_path = out / "plan.json"
    _write_json(
        plan_path,
        {
            "domain": spec.name,
            "params": dataclasses.asdict(spec.params),
            "seed": result.seed,
            "horizon": horizon,
            "action_dim": spec.action_dim,
            "best_instance": result.best_instance,
            "best_value": result.best_value,
            "actions": result.best_actions.tolist(),
        },
    )

    summary = {
        "config": _config_echo(config),
        "domain": spec.name,
        "n_action_variables": config.batch * horizon * spec.action_dim,
        "epochs_run": result.epochs_run,
        "best_value": result.best_value,
        "best_instance": result.best_instance,
        "total_wall_ms": wall_ms,
    }
    if config.heuristic:
        _, _, _, value = heuristic_rollout(spec, horizon)
        summary["heuristic_value"] = value
    summary_path = out / "summary.json"
    _write_json(summary_path, summary)
    return RunOutputs(
        curve_path=curve_path,
        plan_path=plan_path,
        summary_path=summary_path,
        results={"plan": result, "summary": summary},
    )


def compare_optimizers(config: RunConfig, optimizers: list[str]) -> RunOutputs:
    """Run several optimizers from one shared initialization; one CSV."""
    if len(optimizers) < 2:
        raise ConfigError("compare-optimizers needs at least two optimizer names")
    for name in optimizers:
        if name not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {name!r} in compare list")
    out = _prepare_out(config)
    spec = make_domain(config.domain, **config.overrides)
    horizon = config.horizon if config.horizon is not None else spec.default_horizon
    graph = RolloutGraph(spec, horizon, config.batch)
    shared = init_actions(spec, config.batch, horizon, config.seed)
    t0 = time.perf_counter()
    results = {}
    for name in optimizers:
        cfg = dataclasses.replace(config, optimizer=name)
        results[name] = plan(
            spec, _planner_config(cfg), initial_actions=shared, graph=graph
        )
    wall_ms = (time.perf_counter() - t0) * 1e3

    curve_path = out / "optimizer_curves.csv"
    with open(curve_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["optimizer", "epoch", "loss", "best_value", "wall_ms"])
        for name in optimizers:
            for h in results[name].history:
                writer.writerow(
                    [name, h.epoch, repr(h.loss), repr(h.best_value), f"{h.wall_ms:.3f}"]
                )

    summary = {
        "config": _config_echo(config),
        "domain": spec.name,
        "optimizers": optimizers,
        "final_best_values": {n: results[n].best_value for n in optimizers},
        "epochs_run": {n: results[n].epochs_run for n in optimizers},
        "total_wall_ms": wall_ms,
    }
    summary_path = out / "summary.json"
    _write_json(summary_path, summary)
    return RunOutputs(
        curve_path=curve_path,
        plan_path=None,
        summary_path=summary_path,
        results={"plans": results, "summary": summary},
    )


def main(argv=None) -> int:
    try:
        config, compare = parse_config(argv)
        if compare is not None:
            outputs = compare_optimizers(config, compare)
            finals = outputs.results["summary"]["final_best_values"]
            for name in compare:
                print(f"{name}: best value {finals[name]}")
        else:
            outputs = run(config)
            result = outputs.results["plan"]
            print(
                f"{config.domain}: best value {result.best_value} "
                f"(instance {result.best_instance}, {result.epochs_run} epochs)"
            )
        print(f"outputs in {outputs.summary_path.parent}")
        return 0
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
