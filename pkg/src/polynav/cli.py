"""Command line entry point: ``polynav run | bench | validate | list``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import IoError, PolynavError
from .scenario import GOAL_REACHED, benchmark, builtin_scenarios, export, load_scenario, run, write_benchmark


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _load(name):
    try:
        return load_scenario(name)
    except (PolynavError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None


def cmd_run(args) -> int:
    cfg = _load(args.scenario)
    if cfg is None:
        return 2

    def progress(t, controllers, diags):
        if args.verbose and t % 20 == 0:
            pos = ", ".join(f"{c.name}@{c.state[: cfg.dimension].round(3).tolist()}" for c in controllers)
            print(f"step {t}: {pos}", file=sys.stderr)

    record = run(cfg, max_steps=args.max_steps, progress=progress)
    timing = record.timing()
    print(f"scenario: {cfg.name}")
    print(f"outcome: {record.outcome}" + (f" ({record.message})" if record.message else ""))
    print(f"steps: {record.steps}")
    print(f"time per step: {timing['mean_ms']:.2f} +- {timing['std_ms']:.2f} ms")
    for tr in record.tracks:
        dmin = min((d.min_distance for d in tr.diagnostics), default=float("nan"))
        print(f"  {tr.name} ({tr.shape_name}): steps={tr.steps} reached={tr.reached} min_distance={dmin:.4f}")
    if args.out:
        try:
            paths = export(record, args.out, cfg=cfg, plot=args.plot)
        except IoError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 3
        for kind, path in paths.items():
            print(f"wrote {kind}: {path}")
    elif args.plot:
        print("note: --plot needs --out", file=sys.stderr)
    return 0 if record.outcome == GOAL_REACHED else 1


def cmd_bench(args) -> int:
    cfg = _load(args.scenario)
    if cfg is None:
        return 2
    table = benchmark(cfg, trials=args.trials, horizons=_ints(args.horizons), gammas=_floats(args.gammas),
                      seed=args.seed, steps=args.steps, robot_index=args.robot)
    print("shape,horizon,gamma,mean_ms,std_ms,samples,skipped")
    for row in table:
        print(f"{row['shape']},{row['horizon']},{row['gamma']:g},{row['mean_ms']:.3f},{row['std_ms']:.3f},"
              f"{row['samples']},{row['skipped']}")
    if args.out:
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
            write_benchmark(table, out / "benchmark.csv")
            with open(out / "benchmark.json", "w") as fh:
                json.dump(table, fh, indent=2)
            from .scenario.plotting import plot_benchmark

            plot_benchmark(table, out / "benchmark.svg")
        except (IoError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 3
        print(f"wrote {out / 'benchmark.csv'}, {out / 'benchmark.json'}, {out / 'benchmark.svg'}")
    return 0 if all(r["samples"] > 0 for r in table) else 1


def cmd_validate(args) -> int:
    cfg = _load(args.scenario)
    if cfg is None:
        return 2
    print(f"{cfg.name}: valid ({cfg.dimension}-D, {len(cfg.obstacles)} obstacles, {len(cfg.robots)} robots)")
    return 0


def cmd_list(args) -> int:
    for name in builtin_scenarios():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polynav", description="Polytopic robot navigation with iterative MPC.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario in closed loop")
    r.add_argument("scenario", help="scenario file or built-in name")
    r.add_argument("--max-steps", type=int, default=None)
    r.add_argument("--out", default=None, help="directory for trajectory.csv, summary.json and the plot")
    r.add_argument("--plot", action="store_true", help="also write trajectory.svg")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="time per-step solves from random starts")
    b.add_argument("scenario")
    b.add_argument("--trials", type=int, default=20)
    b.add_argument("--horizons", default="6,12,24")
    b.add_argument("--gammas", default="0.1,0.2")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--steps", type=int, default=20)
    b.add_argument("--robot", type=int, default=0, help="index of the robot to benchmark")
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("validate", help="load and check a scenario file")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)

    ls = sub.add_parser("list", help="list built-in scenarios")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "bench" and args.trials < 1:
        print("error: --trials must be at least 1", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
