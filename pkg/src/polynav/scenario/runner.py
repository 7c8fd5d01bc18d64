"""Closed-loop simulation and timing benchmarks."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from ..dynamics import make_model
from ..errors import Infeasible, NoPath, PolynavError
from ..mpc import Controller, World, min_distance
from ..multirobot import pairwise_min_distance, plan_team_step
from ..planner import GridMap, plan_path
from .config import ScenarioConfig

log = logging.getLogger(__name__)

GOAL_REACHED = "GoalReached"
TIMEOUT = "Timeout"
INFEASIBLE = "Infeasible"


@dataclass
class RobotTrack:
    """Everything recorded for one robot; ``states`` has one more row than ``inputs``."""

    name: str
    shape_name: str
    states: list = field(default_factory=list)
    inputs: list = field(default_factory=list)
    min_slack: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    reference_path: np.ndarray | None = None
    goal: np.ndarray | None = None
    reached: bool = False

    @property
    def steps(self) -> int:
        return len(self.inputs)


@dataclass
class RunRecord:
    scenario: str
    dimension: int
    tracks: list
    step_times: list = field(default_factory=list)
    pair_distances: list = field(default_factory=list)
    outcome: str = TIMEOUT
    message: str = ""

    @property
    def steps(self) -> int:
        return len(self.step_times)

    def timing(self) -> dict:
        """Mean and standard deviation of per-step solve time in milliseconds."""
        t = 1000.0 * np.asarray(self.step_times, dtype=float)
        if t.size == 0:
            return {"mean_ms": float("nan"), "std_ms": float("nan"), "steps": 0}
        return {"mean_ms": float(t.mean()), "std_ms": float(t.std()), "steps": int(t.size)}

    def iterations(self) -> np.ndarray:
        return np.array([d.iterations for tr in self.tracks for d in tr.diagnostics], dtype=int)


def build_grid(cfg: ScenarioConfig, shape, cache=None) -> GridMap:
    inflation = cfg.planner.inflation if cfg.planner.inflation is not None else shape.circumscribed_radius
    key = round(float(inflation), 12)
    if cache is not None and key in cache:
        return cache[key]
    grid = GridMap.from_obstacles(cfg.obstacles, cfg.lower, cfg.upper, cfg.planner.resolution, inflation)
    if cache is not None:
        cache[key] = grid
    return grid


def make_controllers(cfg: ScenarioConfig, config_overrides=None, initial_states=None, grid_cache=None):
    model = make_model(cfg.dimension, cfg.mpc.dt)
    world = World(list(cfg.obstacles))
    controllers = []
    for i, r in enumerate(cfg.robots):
        x0 = r.initial_state if initial_states is None else initial_states[i]
        grid = build_grid(cfg, r.shape, grid_cache)
        path = plan_path(grid, x0[list(model.position_indices)], r.goal)
        mcfg = cfg.robot_config(r)
        if config_overrides:
            mcfg = dataclasses.replace(mcfg, **config_overrides)
        controllers.append(Controller(model, r.shape, path, r.goal, mcfg, x0, world, name=r.name))
    return controllers, world


def run(cfg: ScenarioConfig, max_steps: int | None = None, config_overrides=None, initial_states=None,
        progress=None) -> RunRecord:
    """Simulate the closed loop until every robot is at its goal or the step budget runs out.

    Failures end up in ``outcome`` and ``message``; this function does not raise
    for planning or infeasibility problems.
    """
    max_steps = cfg.max_steps if max_steps is None else max_steps
    record = RunRecord(cfg.name, cfg.dimension, [])
    try:
        controllers, world = make_controllers(cfg, config_overrides, initial_states)
    except (NoPath, PolynavError) as exc:
        record.outcome, record.message = INFEASIBLE, str(exc)
        return record
    for ctrl, spec in zip(controllers, cfg.robots):
        record.tracks.append(RobotTrack(spec.name, spec.shape_name, [ctrl.state.copy()],
                                        reference_path=ctrl.path.waypoints.copy(), goal=spec.goal.copy()))
    parked = []
    for t in range(max_steps):
        active = [not c.at_goal() for c in controllers]
        for tr, c in zip(record.tracks, controllers):
            tr.reached = c.at_goal()
        if not any(active):
            record.outcome = GOAL_REACHED
            break
        try:
            inputs, _, diags = plan_team_step(controllers, world, parked)
        except (PolynavError, np.linalg.LinAlgError) as exc:
            record.outcome, record.message = INFEASIBLE, f"{type(exc).__name__}: {exc}"
            for tr, c in zip(record.tracks, controllers):
                tr.reached = c.at_goal()
            return record
        total = 0.0
        for i, (tr, c) in enumerate(zip(record.tracks, controllers)):
            if not active[i]:
                continue
            tr.inputs.append(np.asarray(inputs[i], dtype=float).copy())
            tr.states.append(c.state.copy())
            tr.diagnostics.append(diags[i])
            tr.min_slack.append(float(c.last_omegas.min()) if c.last_omegas.size else float("nan"))
            total += diags[i].solve_time
        record.step_times.append(total)
        if len(controllers) > 1:
            record.pair_distances.append(pairwise_min_distance(controllers))
        if progress is not None:
            progress(t, controllers, diags)
    else:
        for tr, c in zip(record.tracks, controllers):
            tr.reached = c.at_goal()
        record.outcome = GOAL_REACHED if all(c.at_goal() for c in controllers) else TIMEOUT
    return record


# -- benchmark -----------------------------------------------------------------------------

def sample_starts(cfg: ScenarioConfig, robot_index, count, rng, margin=0.01, max_tries=20000):
    """Collision-free random starts with heading along the local reference path."""
    spec = cfg.robots[robot_index]
    model = make_model(cfg.dimension, cfg.mpc.dt)
    grid = build_grid(cfg, spec.shape)
    free = np.argwhere(~grid.occupied)
    starts = []
    tries = 0
    while len(starts) < count and tries < max_tries:
        tries += 1
        cell = free[rng.integers(len(free))]
        pos = grid.cell_center(cell) + (rng.random(cfg.dimension) - 0.5) * grid.resolution
        if np.linalg.norm(pos - spec.goal) < 0.3:
            continue
        try:
            path = plan_path(grid, pos, spec.goal)
        except NoPath:
            continue
        ahead = path.point_at(min(0.06, path.length))
        ang = model.heading_from_direction(ahead - pos)
        x0 = np.zeros(model.n_states)
        x0[list(model.position_indices)] = pos
        x0[list(model.angle_indices)] = ang
        (xlo, xhi), _ = cfg.mpc.bounds(model)
        if np.any(x0 < xlo) or np.any(x0 > xhi):
            continue
        if min_distance(spec.shape, x0, cfg.obstacles, model) <= margin:
            continue
        starts.append(x0)
    return starts


def benchmark(cfg: ScenarioConfig, trials=20, horizons=(6, 12, 24), gammas=(0.1, 0.2), seed=0, steps=20,
              robot_index=0) -> list[dict]:
    """Per-step solve time statistics for each (horizon, gamma) pair.

    All cells share the same random starts so that only the settings vary.
    """
    rng = np.random.default_rng(seed)
    spec = cfg.robots[robot_index]
    starts = sample_starts(cfg, robot_index, trials, rng)
    grid_cache = {}
    single = dataclasses.replace(cfg, robots=[spec])
    table = []
    for N in horizons:
        for g in gammas:
            cbf = dataclasses.replace(cfg.mpc.cbf, gammas=(float(g),) + tuple(cfg.mpc.cbf.gammas[1:]))
            overrides = {"horizon": int(N), "cbf": cbf}
            times, skipped = [], 0
            for x0 in starts:
                try:
                    ctrls, world = make_controllers(single, overrides, [x0], grid_cache)
                    ctrl = ctrls[0]
                    for _ in range(steps):
                        if ctrl.at_goal():
                            break
                        _, _, d = ctrl.step(world)
                        times.append(d.solve_time)
                except (Infeasible, NoPath) as exc:
                    skipped += 1
                    log.info("skipping start %s: %s", np.round(x0, 4), exc)
            t = 1000.0 * np.asarray(times)
            table.append({"shape": spec.shape_name, "horizon": int(N), "gamma": float(g),
                          "mean_ms": float(t.mean()) if t.size else float("nan"),
                          "std_ms": float(t.std()) if t.size else float("nan"),
                          "samples": int(t.size), "trials": len(starts), "skipped": skipped})
    return table
