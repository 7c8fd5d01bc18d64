"""Writing run records: a CSV trajectory table, a JSON summary, and an SVG plot."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..errors import IoError

TRAJECTORY_FILE = "trajectory.csv"
SUMMARY_FILE = "summary.json"
PLOT_FILE = "trajectory.svg"


def trajectory_header(n_states, n_inputs):
    return (["robot", "t"] + [f"x{i}" for i in range(n_states)] + [f"u{i}" for i in range(n_inputs)]
            + ["min_distance", "iterations", "solve_time_ms", "min_slack", "fallback"])


def write_trajectory(record, path, n_states, n_inputs):
    """One row per robot and step: the state the step started from and the input applied."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trajectory_header(n_states, n_inputs))
        for track in record.tracks:
            for t, (x, u, d) in enumerate(zip(track.states, track.inputs, track.diagnostics)):
                slack = track.min_slack[t] if t < len(track.min_slack) else float("nan")
                w.writerow([track.name, t] + [repr(float(v)) for v in x] + [repr(float(v)) for v in u]
                           + [repr(float(d.min_distance)), d.iterations, repr(1000.0 * d.solve_time),
                              repr(float(slack)), d.fallback or ""])
    return path


def read_trajectory(path):
    """Parse a trajectory table back into a list of row dicts with numeric fields converted."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out = {}
            for k, v in row.items():
                if k in ("robot", "fallback"):
                    out[k] = v
                elif k in ("t", "iterations"):
                    out[k] = int(v)
                else:
                    out[k] = float(v)
            rows.append(out)
    return rows


def _finite(value):
    """JSON has no infinity; distances to nothing at all become null."""
    value = float(value)
    return value if np.isfinite(value) else None


def summary(record) -> dict:
    timing = record.timing()
    iters = record.iterations()
    return {
        "scenario": record.scenario,
        "outcome": record.outcome,
        "message": record.message,
        "steps": record.steps,
        "timing_ms": {"mean": _finite(timing["mean_ms"]), "std": _finite(timing["std_ms"])},
        "iterations": {"median": float(np.median(iters)) if iters.size else None,
                       "max": int(iters.max()) if iters.size else None},
        "robots": [
            {
                "name": tr.name,
                "shape": tr.shape_name,
                "steps": tr.steps,
                "reached": bool(tr.reached),
                "min_distance": _finite(min((d.min_distance for d in tr.diagnostics), default=float("inf"))),
                "fallbacks": sum(1 for d in tr.diagnostics if d.fallback),
            }
            for tr in record.tracks
        ],
        "min_pair_distance": _finite(min(record.pair_distances)) if record.pair_distances else None,
    }


def export(record, out_dir, cfg=None, plot=False, n_states=None, n_inputs=None):
    """Write the trajectory table, the summary and optionally the plot; return the paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if n_states is None:
            n_states = 4 if record.dimension == 2 else 6
        if n_inputs is None:
            n_inputs = 2 if record.dimension == 2 else 3
        paths = {"trajectory": write_trajectory(record, out / TRAJECTORY_FILE, n_states, n_inputs)}
        with open(out / SUMMARY_FILE, "w") as fh:
            json.dump(summary(record), fh, indent=2)
        paths["summary"] = out / SUMMARY_FILE
        if plot:
            if cfg is None:
                raise ValueError("plotting needs the scenario config")
            from .plotting import plot_run

            paths["plot"] = plot_run(record, cfg, out / PLOT_FILE)
    except OSError as exc:
        raise IoError(f"could not write results to {out}: {exc}") from exc
    return paths


def write_benchmark(table, path):
    keys = ["shape", "horizon", "gamma", "mean_ms", "std_ms", "samples", "trials", "skipped"]
    try:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys)
            w.writeheader()
            for row in table:
                w.writerow({k: row[k] for k in keys})
    except OSError as exc:
        raise IoError(f"could not write {path}: {exc}") from exc
    return path
