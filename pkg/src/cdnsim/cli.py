"""Command-line front end.

Subcommands:
  run               run an experiment and write records/summary/plot files
  list-experiments  print the available experiments
  validate-config   parse and validate a config file
  trace             run one repetition with the event trace enabled

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .experiments import (ExperimentOutput, NdnWorld, run_experiment)
from .metrics import records_to_csv, summarize, summary_to_csv
from .scenarios import (EXPERIMENT_SUMMARIES, ConfigError, ScenarioConfig,
                        config_from_dict, load_config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdnsim",
        description="Deterministic simulator comparing NDN content delivery "
                    "with an HTTP caching-proxy chain on a small CDN topology.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--experiment", choices=list("ABCDEF"),
                     help="experiment to run (overrides the config)")
    run.add_argument("--out", default="out", help="output directory")
    run.add_argument("--seed", type=int, help="override the base seed")
    run.add_argument("--reps", type=int, help="override repetitions")
    run.add_argument("--plane", choices=["ndn", "http", "both"],
                     help="override which plane(s) to run")
    run.add_argument("--jobs", type=int, default=1,
                     help="run repetitions in parallel processes")
    run.add_argument("--trace", action="store_true",
                     help="also write an event trace of one run to the "
                          "output directory")

    sub.add_parser("list-experiments", help="describe the experiments")

    val = sub.add_parser("validate-config", help="check a config file")
    val.add_argument("config")

    trace = sub.add_parser("trace", help="run one scenario with event tracing")
    trace.add_argument("--config", help="JSON config file")
    trace.add_argument("--experiment", choices=list("ABCDEF"))
    trace.add_argument("--seed", type=int)
    trace.add_argument("--size", type=int, help="file size in bytes")
    trace.add_argument("--out", help="write the trace here instead of stdout")
    return parser


def _load(args) -> ScenarioConfig:
    if args.config:
        cfg = load_config(args.config)
    elif getattr(args, "experiment", None):
        cfg = config_from_dict({"experiment": args.experiment})
    else:
        raise ConfigError("either --config or --experiment is required")
    if getattr(args, "experiment", None):
        if cfg.experiment != args.experiment:
            cfg = config_from_dict({"experiment": args.experiment})
    if getattr(args, "seed", None) is not None:
        cfg.base_seed = args.seed
    if getattr(args, "reps", None) is not None:
        if args.reps < 1:
            raise ConfigError("reps: must be >= 1")
        cfg.repetitions = args.reps
    if getattr(args, "plane", None):
        cfg.plane = args.plane
    return cfg.validate()


def _record_key(rec):
    return (rec.experiment, rec.plane, rec.size_bytes, rec.mode, rec.seed)


def _run_one_rep(cfg: ScenarioConfig, rep: int):
    return run_experiment(cfg, reps=[rep]).records


def _run(cfg: ScenarioConfig, jobs: int) -> ExperimentOutput:
    if jobs <= 1 or cfg.repetitions == 1:
        return run_experiment(cfg)
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        chunks = pool.map(_run_one_rep, [cfg] * cfg.repetitions,
                          range(cfg.repetitions))
    records = [rec for chunk in chunks for rec in chunk]
    return ExperimentOutput(records)


def cmd_run(args) -> int:
    cfg = _load(args)
    out = _run(cfg, args.jobs)
    records = sorted(out.records, key=_record_key)
    rows, warnings = summarize(records)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "records.csv"), "w") as fh:
        fh.write(records_to_csv(records))
    with open(os.path.join(args.out, "summary.csv"), "w") as fh:
        fh.write(summary_to_csv(rows))
    plot_files = out.plot_files or _replot(cfg, records)
    for name, text in plot_files.items():
        with open(os.path.join(args.out, name), "w") as fh:
            fh.write(text)
    if getattr(args, "trace", False):
        world = NdnWorld(cfg, cfg.base_seed, cfg.file_sizes[0], trace=True)
        world.fetch()
        with open(os.path.join(args.out, "trace.txt"), "w") as fh:
            fh.write(world.sim.trace_text())
    failures = sum(1 for r in records if not r.success)
    print(f"experiment {cfg.experiment}: {len(records)} runs, "
          f"{failures} failed, output in {args.out}/")
    if warnings:
        print(f"warning: {warnings} group(s) had no successful runs",
              file=sys.stderr)
    return 0


def _replot(cfg: ScenarioConfig, records) -> dict:
    # Parallel runs return bare records; rebuild the plot data from them.
    from .experiments import _cache_plot, _completion_plot, _ttfb_plot
    if cfg.experiment == "B":
        return _ttfb_plot(records)
    if cfg.experiment == "C":
        return _cache_plot(records)
    return _completion_plot(cfg.experiment, records)


def cmd_list(_args) -> int:
    for exp in sorted(EXPERIMENT_SUMMARIES):
        print(f"{exp}  {EXPERIMENT_SUMMARIES[exp]}")
    return 0


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(f"{args.config}: valid (experiment {cfg.experiment}, "
          f"plane {cfg.plane}, {cfg.repetitions} repetition(s))")
    return 0


def cmd_trace(args) -> int:
    cfg = _load(args)
    size = args.size if args.size else cfg.file_sizes[0]
    world = NdnWorld(cfg, cfg.base_seed, size, trace=True)
    world.fetch()
    text = world.sim.trace_text()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"trace written to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {
    "run": cmd_run,
    "list-experiments": cmd_list,
    "validate-config": cmd_validate,
    "trace": cmd_trace,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
