"""Command-line entry point: config parsing, runs, sweeps and file export.

Config files are YAML mappings whose keys are the ``ScenarioConfig`` fields
(``placement`` is a nested mapping with ``cell_radius`` and
``pbs_ring_radius``). Missing keys take the defaults; unknown keys are
rejected. ``mbs_power``/``pbs_power``, ``coherence``, ``horizon``,
``initial_battery`` and the placement are simulator defaults rather than
published scenario values.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__, metrics
from .engine import run_simulation
from .model import ConfigError, InvariantViolation, Placement, ScenarioConfig, SimLog

_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
_PLACEMENT_FIELDS = {f.name for f in dataclasses.fields(Placement)}
_FLOAT_FIELDS = {"mbs_power", "pbs_power", "user_noise", "bs_noise", "decode_noise",
                 "battery_cap", "initial_battery"}


def config_from_dict(data: dict | None) -> ScenarioConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a mapping")
    data = dict(data)
    for key in data:
        if key not in _FIELDS:
            raise ConfigError(str(key), "unknown key")
    placement = data.pop("placement", None) or {}
    if not isinstance(placement, dict):
        raise ConfigError("placement", "expected a mapping")
    for key, value in placement.items():
        if key not in _PLACEMENT_FIELDS:
            raise ConfigError(f"placement.{key}", "unknown key")
        if value is not None and (isinstance(value, bool) or not isinstance(value, (int, float))):
            raise ConfigError(f"placement.{key}", f"expected a number, got {value!r}")
    return ScenarioConfig(placement=Placement(**placement), **data)


def config_to_dict(config: ScenarioConfig) -> dict:
    out = dataclasses.asdict(config)
    for key in _FLOAT_FIELDS:
        out[key] = float(out[key])
    for key, value in out["placement"].items():
        if value is not None:
            out["placement"][key] = float(value)
    return out


def parse_config(path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<root>", f"invalid YAML: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError("<root>", "expected a mapping")
    return config_from_dict(data)


def serialize_config(config: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=True)


def config_hash(config: ScenarioConfig) -> str:
    canonical = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _write_rows(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _user_matrix_rows(log: SimLog, matrix: np.ndarray):
    for t, row in zip(log.epochs, matrix):
        yield [int(t)] + [float(v) for v in row]


def summarize(log: SimLog) -> dict:
    events = []
    for epoch, a in zip(log.association_epochs, log.associations):
        bs = a.serving_bs
        util = a.user_values(np.where(np.isfinite(a.utility), a.utility, 0.0))
        events.append({
            "epoch": int(epoch),
            "num_associated": a.num_associated,
            "dl_sum_rate": a.dl_sum_rate,
            "serving_bs": [int(b) if b >= 0 else "unassociated" for b in bs],
            "utility": [float(u) if b >= 0 else "unassociated" for u, b in zip(util, bs)],
        })
    diag = log.diagnostics
    return {
        "totals": metrics.totals(log),
        "fairness": metrics.fairness(log),
        "discharge": metrics.discharge_stats(log),
        "association_events": events,
        "drift_bound": {
            "epochs": len(diag),
            "weighted_holds": sum(d.weighted_bound_holds for d in diag),
            "unweighted_holds": sum(d.unweighted_bound_holds for d in diag),
            "mixed_holds": sum(d.mixed_bound_holds for d in diag),
        },
    }


def cmd_run(config: ScenarioConfig, out_dir) -> SimLog:
    """Simulate and write battery/harvest/schedule CSVs, summary and manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log = run_simulation(config)
    users = [f"user_{k}" for k in range(config.num_users)]
    _write_rows(out / "battery.csv", ["epoch"] + users,
                _user_matrix_rows(log, log.battery_end))
    _write_rows(out / "harvest.csv", ["epoch"] + users,
                _user_matrix_rows(log, log.harvested))
    rows = []
    for i, t in enumerate(log.epochs):
        for j, k in enumerate(log.winner[i]):
            if k >= 0:
                rows.append([int(t), j, int(k), float(log.tx_power[i, k]),
                             float(log.ul_rate[i, k]), float(log.control[i, k])])
    _write_rows(out / "schedule.csv", ["epoch", "cell", "winner", "power", "rate", "control"],
                rows)
    _write_json(out / "summary.json", summarize(log))
    _write_json(out / "manifest.json", manifest(config))
    return log


def manifest(config: ScenarioConfig, **extra) -> dict:
    return {
        "config": config_to_dict(config),
        "config_hash": config_hash(config),
        "seed": config.rng_seed,
        "version": __version__,
        "simulator_defaults": ["mbs_power", "pbs_power", "coherence", "horizon",
                               "initial_battery", "placement"],
        **extra,
    }


SWEEP_HEADER = ["num_users", "mode", "metric", "mean", "median", "seeds"]


def cmd_sweep(template: ScenarioConfig, user_counts, seeds, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = list(seeds)
    points = metrics.sweep(template, user_counts, seeds)
    series = metrics.sweep_series(points)
    _write_rows(out / "sweep.csv", SWEEP_HEADER,
                ([r[h] for h in SWEEP_HEADER] for r in series))
    _write_rows(out / "sweep_points.csv",
                ["num_users", "mode", "seed", "total_received_energy", "sum_rate_dl"],
                ([p.num_users, p.mode, p.seed, p.total_received_energy, p.sum_rate_dl]
                 for p in points))
    verdict = metrics.sweep_verdict(points)
    _write_json(out / "verdict.json", verdict)
    _write_json(out / "manifest.json",
                manifest(template, user_counts=list(map(int, user_counts)), seeds=seeds))
    return verdict


def read_sweep_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["num_users"] = int(r["num_users"])
        r["mean"] = float(r["mean"])
        r["median"] = float(r["median"])
        r["seeds"] = int(r["seeds"])
    return rows


def _load(args) -> ScenarioConfig:
    config = parse_config(args.config) if args.config else ScenarioConfig()
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["rng_seed"] = args.seed
    if getattr(args, "mode", None):
        changes["association_mode"] = args.mode
    if getattr(args, "ul_policy", None):
        changes["ul_policy"] = args.ul_policy
    return config.replace(**changes) if changes else config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetswipt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML scenario file (defaults if omitted)")
        p.add_argument("--seed", type=int, help="override rng_seed")
        p.add_argument("--mode", choices=["utility", "max_rate"],
                       help="DL association criterion")
        p.add_argument("--ul-policy", choices=["lyapunov", "max_rate"])

    p = sub.add_parser("run", help="simulate one scenario")
    common(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("sweep", help="received-energy / DL sum-rate sweep over K")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", type=int, default=20, help="number of seeds")
    p.add_argument("--users", default="10,20,30,40,50",
                   help="comma-separated user counts")

    p = sub.add_parser("validate", help="check a config file")
    common(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load(args)
        if args.command == "validate":
            print(f"ok {config_hash(config)}")
        elif args.command == "run":
            log = cmd_run(config, args.out)
            print(json.dumps(metrics.totals(log)["total_received_energy"]))
        elif args.command == "sweep":
            counts = [int(v) for v in args.users.split(",") if v.strip()]
            seeds = range(config.rng_seed, config.rng_seed + args.seeds)
            verdict = cmd_sweep(config, counts, seeds, args.out)
            print(json.dumps(verdict, sort_keys=True))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
