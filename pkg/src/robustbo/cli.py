"""Command-line front end.

Subcommands:
  bench    run a benchmark batch from a JSON config, emit JSON Lines
  run      optimize an external command via a stdin/stdout protocol
  suggest  print the next point implied by a history file
  tell     append one observation to a history file
  report   aggregate benchmark records into a plottable CSV table

Exit codes: 0 success, 2 configuration/input error, 3 numerical or
evaluation failure.
"""

from __future__ import annotations

import argparse
import json
import shlex
import subprocess
import sys

import numpy as np

from .bench import (
    BenchSpec,
    aggregate,
    record_from_json,
    record_to_json,
    run_trials,
)
from .bo_loop import BOConfig, replay_state, suggest as bo_suggest, tell as \
    bo_tell
from .kernels import KernelFamily
from .robust import Schedule

SCHEMA_VERSION = "1"

_BENCH_FIELDS = {
    "version", "dimension", "budget", "trials", "outlier_rate", "generator",
    "alpha", "gen_lengthscale", "methods", "seed", "n_init", "warmup",
    "period", "quantile", "bounds",
}

_RUN_FIELDS = {
    "version", "type", "dimension", "budget", "n_init", "seed", "robust",
    "warmup", "period", "quantile", "bounds",
}


class ConfigError(ValueError):
    pass


def _require_version(doc: dict) -> None:
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"config field 'version' must be '{SCHEMA_VERSION}', "
            f"got {version!r}")


def parse_bench_config(doc: dict) -> BenchSpec:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - _BENCH_FIELDS
    if unknown:
        raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
    _require_version(doc)
    gen = doc.get("generator", "matern52")
    families = {"matern52": KernelFamily.MATERN52,
                "rq": KernelFamily.RATIONAL_QUADRATIC}
    if gen not in families:
        raise ConfigError(f"config field 'generator' must be one of "
                          f"{sorted(families)}, got {gen!r}")
    schedule = Schedule(
        warmup_fraction=float(doc.get("warmup", 0.25)),
        period=int(doc.get("period", 5)),
        quantile=float(doc.get("quantile", 0.05)),
    )
    try:
        return BenchSpec(
            dimension=int(doc.get("dimension", 8)),
            generator=families[gen],
            gen_lengthscale=float(doc.get("gen_lengthscale", 0.3)),
            alpha=float(doc.get("alpha", 2.0)),
            outlier_rate=float(doc.get("outlier_rate", 0.2)),
            trials=int(doc.get("trials", 20)),
            budget=int(doc.get("budget", 60)),
            n_init=int(doc.get("n_init", 5)),
            methods=tuple(doc.get("methods", ["vanilla", "robust", "clean"])),
            base_seed=int(doc.get("seed", 0)),
            schedule=schedule,
            bounds=(np.asarray(doc["bounds"], dtype=float)
                    if "bounds" in doc else None),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_run_config(doc: dict) -> BOConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config header must be a JSON object")
    unknown = set(doc) - _RUN_FIELDS
    if unknown:
        raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
    _require_version(doc)
    for name in ("dimension", "budget", "bounds"):
        if name not in doc:
            raise ConfigError(f"missing config field '{name}'")
    schedule = Schedule(
        warmup_fraction=float(doc.get("warmup", 0.25)),
        period=int(doc.get("period", 5)),
        quantile=float(doc.get("quantile", 0.05)),
    )
    try:
        return BOConfig(
            dimension=int(doc["dimension"]),
            bounds=np.asarray(doc["bounds"], dtype=float),
            budget=int(doc["budget"]),
            n_init=int(doc.get("n_init", 5)),
            schedule=schedule,
            seed=int(doc.get("seed", 0)),
            robust_enabled=bool(doc.get("robust", True)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def run_config_header(config: BOConfig) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "type": "config",
        "dimension": config.dimension,
        "bounds": config.bounds.tolist(),
        "budget": config.budget,
        "n_init": config.n_init,
        "seed": config.seed,
        "robust": config.robust_enabled,
        "warmup": config.schedule.warmup_fraction,
        "period": config.schedule.period,
        "quantile": config.schedule.quantile,
    }


def read_history(path: str) -> tuple[BOConfig, list]:
    """Parse a history file: one config header line then observation lines."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ConfigError("history file is empty (line 1)")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON on line 1: {exc}") from exc
    config = parse_run_config(header)
    observations = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            point = np.asarray(rec["x"], dtype=float)
            value = float(rec["y"])
        except (json.JSONDecodeError, KeyError, TypeError,
                ValueError) as exc:
            raise ConfigError(f"invalid history record on line "
                              f"{lineno}: {exc}") from exc
        observations.append((point, value))
    return config, observations


def _format_point(point) -> str:
    return " ".join(repr(float(v)) for v in point)


def cmd_bench(args) -> int:
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        bench = parse_bench_config(doc)
        if args.seed is not None:
            bench = BenchSpec(**{**bench.__dict__, "base_seed": args.seed})
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        with open(args.out, "w") as fh:
            def flush_trial(trial, out):
                if isinstance(out, Exception):
                    print(f"warning: trial {trial} failed: {out}",
                          file=sys.stderr)
            records = run_trials(bench, parallelism=args.parallel,
                                 on_trial=flush_trial)
            for rec in records:
                fh.write(record_to_json(rec) + "\n")
            fh.flush()
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


def subprocess_objective(command: str, dimension: int):
    """Objective that feeds points to a child process on stdin.

    The child receives one line of space-separated decimals and must print
    one finite decimal on stdout.  A nonzero exit or unparsable output is
    an evaluation failure.
    """
    argv = shlex.split(command)

    def evaluate(point) -> float:
        line = _format_point(point) + "\n"
        proc = subprocess.run(argv, input=line, capture_output=True,
                              text=True, timeout=3600)
        if proc.returncode != 0:
            raise RuntimeError(f"child exited with {proc.returncode}")
        try:
            value = float(proc.stdout.strip().split()[-1])
        except (ValueError, IndexError) as exc:
            raise RuntimeError(
                f"child printed non-numeric output: {proc.stdout!r}") from exc
        if not np.isfinite(value):
            raise RuntimeError(f"child printed non-finite value {value}")
        return value

    return evaluate


def cmd_run(args) -> int:
    try:
        bounds = np.asarray(json.loads(args.bounds), dtype=float)
        schedule = Schedule(warmup_fraction=args.warmup, period=args.period,
                            quantile=args.quantile)
        config = BOConfig(
            dimension=args.dimension, bounds=bounds, budget=args.budget,
            n_init=args.n_init, schedule=schedule, seed=args.seed,
            robust_enabled=(args.robust == "on"),
        )
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    raw = subprocess_objective(args.command, args.dimension)
    failures = 0
    observed: list[float] = []

    def evaluate(point) -> float:
        nonlocal failures
        for attempt in range(2):
            try:
                value = raw(point)
                observed.append(value)
                return value
            except RuntimeError as exc:
                last = exc
        failures += 1
        if observed:
            penalty = max(observed) + float(np.std(observed))
        else:
            penalty = args.penalty
        print(f"warning: evaluation failed ({last}); using penalty "
              f"{penalty}", file=sys.stderr)
        return penalty

    from .bo_loop import run_bo
    result = run_bo(evaluate, config)
    with open(args.out, "w") as fh:
        fh.write(json.dumps(run_config_header(config)) + "\n")
        for row in result.history:
            fh.write(json.dumps({"iter": row["iter"],
                                 "x": [float(v) for v in row["x"]],
                                 "y": row["y"]}) + "\n")
    if failures >= config.budget:
        print("error: every evaluation failed", file=sys.stderr)
        return 3
    print(f"incumbent {_format_point(result.incumbent_point)} "
          f"value {result.incumbent_value!r}")
    return 0


def cmd_suggest(args) -> int:
    try:
        config, observations = read_history(args.history)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    state = replay_state(config, observations)
    point = bo_suggest(state, config)
    print(_format_point(point))
    return 0


def cmd_tell(args) -> int:
    try:
        config, observations = read_history(args.history)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    point = np.asarray([float(v) for v in args.point], dtype=float)
    if point.size != config.dimension:
        print(f"error: point has {point.size} coordinates, expected "
              f"{config.dimension}", file=sys.stderr)
        return 2
    if not np.isfinite(args.value):
        print("error: value must be finite", file=sys.stderr)
        return 2
    with open(args.history, "a") as fh:
        fh.write(json.dumps({"iter": len(observations),
                             "x": point.tolist(),
                             "y": float(args.value)}) + "\n")
    return 0


def cmd_report(args) -> int:
    try:
        with open(args.input) as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not lines:
        print("error: empty input", file=sys.stderr)
        return 2
    try:
        records = [record_from_json(ln) for ln in lines]
        rows = aggregate(records)
    except (ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    with open(args.out, "w") as fh:
        fh.write("method,iter,mean,median,lo95,hi95\n")
        for row in rows:
            fh.write(f"{row['method']},{row['iter']},{row['mean']!r},"
                     f"{row['median']!r},{row['lo95']!r},{row['hi95']!r}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustbo",
        description="Bayesian optimization with outlier rejection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="run a benchmark batch")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("run", help="optimize an external command")
    p.add_argument("command", help="shell command evaluating one point")
    p.add_argument("--dimension", type=int, required=True)
    p.add_argument("--bounds", required=True,
                   help="JSON [[lo, hi], ...] per dimension")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--n-init", type=int, default=5)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--robust", choices=("on", "off"), default="on")
    p.add_argument("--quantile", type=float, default=0.05)
    p.add_argument("--warmup", type=float, default=0.25)
    p.add_argument("--period", type=int, default=5)
    p.add_argument("--penalty", type=float, default=1e6,
                   help="fallback value when an evaluation fails before "
                        "any succeeded")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("suggest", help="print the next point for a history")
    p.add_argument("history")
    p.set_defaults(func=cmd_suggest)

    p = sub.add_parser("tell", help="append an observation to a history")
    p.add_argument("history")
    p.add_argument("--point", nargs="+", required=True)
    p.add_argument("--value", type=float, required=True)
    p.set_defaults(func=cmd_tell)

    p = sub.add_parser("report", help="aggregate records into a CSV table")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def entry() -> None:  # console-script shim
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
