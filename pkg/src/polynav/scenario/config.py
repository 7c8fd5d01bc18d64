"""Scenario files: YAML documents describing a world, robots and settings.

Schema (all lengths in meters)::

    name: maze2d-rectangle
    dimension: 2
    bounds: {lower: [0, 0], upper: [1.5, 1.2]}
    obstacles:
      - box: {lower: [0.4, 0.0], upper: [0.46, 0.8]}
      - vertices: [[0, 0], [1, 0], [0, 1]]
      - halfspaces: {a: [[1, 0], [-1, 0], [0, 1], [0, -1]], b: [1, 0, 1, 0]}
    robots:
      - name: r1
        shape: rectangle            # built-in name, or {pieces: [<obstacle-style entries>]}
        scale: 1.0
        initial_state: [0.15, 0.225, 0.0, 0.0]
        goal: [1.275, 0.975]
        goal_radius: 0.05
    mpc: {horizon: 12, gamma: 0.1, epsilon: 0.0, q_weights: [...], ...}
    planner: {resolution: 0.015, inflation: null}
    seed: 0
    max_steps: 400
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from ..cbf import CbfParams
from ..dynamics import DEFAULT_DT
from ..errors import DimensionMismatch, EmptyPolytope, ParseError, UnboundedPolytope, ValidationError
from ..geometry import Polytope, RobotShape
from ..mpc import MpcConfig, min_distance
from ..qp import QpSettings
from .shapes import SHAPES, builtin_shape

_CBF_KEYS = {"gamma": "gammas", "gammas": "gammas", "epsilon": "epsilon", "omega_min": "omega_min",
             "omega_max": "omega_max", "omega_ref": "omega_ref", "m": "m", "m_cbf": "m_cbf"}
_MPC_KEYS = {f.name for f in dataclasses.fields(MpcConfig)} - {"cbf", "qp_settings"}
_QP_KEYS = {f.name for f in dataclasses.fields(QpSettings)}


@dataclass
class RobotSpec:
    name: str
    shape: RobotShape
    shape_name: str
    initial_state: np.ndarray
    goal: np.ndarray
    goal_radius: float = 0.05
    scale: float = 1.0


@dataclass
class PlannerSpec:
    resolution: float = 0.015
    inflation: float | None = None


@dataclass
class ScenarioConfig:
    name: str
    dimension: int
    lower: np.ndarray
    upper: np.ndarray
    obstacles: list
    robots: list
    mpc: MpcConfig
    planner: PlannerSpec = field(default_factory=PlannerSpec)
    seed: int = 0
    max_steps: int = 400
    description: str = ""
    source: str | None = None

    def robot_config(self, robot: RobotSpec) -> MpcConfig:
        return dataclasses.replace(self.mpc, goal_radius=robot.goal_radius)


# -- parsing helpers ------------------------------------------------------------------

class _Doc:
    """Raw mapping plus the YAML node tree, for line numbers in errors."""

    def __init__(self, text, source):
        self.source = source or "<string>"
        try:
            self.node = yaml.compose(text, Loader=yaml.SafeLoader)
            self.data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"line {mark.line + 1}" if mark is not None else "unknown line"
            raise ParseError(f"{self.source}: {where}: {getattr(exc, 'problem', exc)}") from None
        if not isinstance(self.data, dict):
            raise ParseError(f"{self.source}: top level must be a mapping")

    def line(self, path):
        node = self.node
        for key in path:
            if isinstance(node, yaml.MappingNode):
                nxt = None
                for k, v in node.value:
                    if k.value == key:
                        nxt = v
                        break
            elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
                nxt = node.value[key]
            else:
                nxt = None
            if nxt is None:
                break
            node = nxt
        return node.start_mark.line + 1

    def fail(self, path, msg, exc=ParseError):
        dotted = ".".join(str(p) for p in path) or "<root>"
        raise exc(f"{self.source}: line {self.line(path)}: field '{dotted}': {msg}")


def _vector(doc, path, value, length=None):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        doc.fail(path, "expected a list of numbers")
    if arr.ndim != 1 or (length is not None and arr.size != length):
        want = f"{length} numbers" if length is not None else "a flat list of numbers"
        doc.fail(path, f"expected {want}")
    return arr


def _polytope(doc, path, entry, dim):
    if not isinstance(entry, dict) or len(entry) != 1:
        doc.fail(path, "expected one of 'box', 'vertices' or 'halfspaces'")
    kind, body = next(iter(entry.items()))
    try:
        if kind == "box":
            if not isinstance(body, dict):
                doc.fail(path + [kind], "box needs 'lower' and 'upper'")
            lo = _vector(doc, path + [kind, "lower"], body.get("lower"), dim)
            hi = _vector(doc, path + [kind, "upper"], body.get("upper"), dim)
            if np.any(lo >= hi):
                doc.fail(path + [kind], "box lower corner must be below the upper corner", ValidationError)
            return Polytope.from_box(lo, hi)
        if kind == "vertices":
            pts = np.asarray(body, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != dim:
                doc.fail(path + [kind], f"expected a list of {dim}-D points")
            return Polytope.from_vertices(pts)
        if kind == "halfspaces":
            if not isinstance(body, dict):
                doc.fail(path + [kind], "halfspaces need 'a' and 'b'")
            A = np.asarray(body.get("a"), dtype=float)
            b = _vector(doc, path + [kind, "b"], body.get("b"))
            if A.ndim != 2 or A.shape != (b.size, dim):
                doc.fail(path + [kind, "a"], f"expected a {b.size} x {dim} matrix")
            return Polytope(A, b)
    except (EmptyPolytope, UnboundedPolytope) as exc:
        doc.fail(path, str(exc), ValidationError)
    except (TypeError, ValueError) as exc:
        doc.fail(path, str(exc))
    doc.fail(path, f"unknown obstacle kind {kind!r}")


def _mpc_config(doc, section, dim):
    section = section or {}
    if not isinstance(section, dict):
        doc.fail(["mpc"], "expected a mapping")
    mpc_kw, cbf_kw, qp_kw = {}, {}, {}
    for key, value in section.items():
        if key in _CBF_KEYS:
            cbf_kw[_CBF_KEYS[key]] = value
        elif key == "qp":
            if not isinstance(value, dict) or set(value) - _QP_KEYS:
                doc.fail(["mpc", "qp"], f"allowed keys: {sorted(_QP_KEYS)}")
            qp_kw = value
        elif key in _MPC_KEYS:
            if key in ("state_bounds", "input_bounds"):
                value = tuple(np.asarray(v, dtype=float) for v in value)
            mpc_kw[key] = value
        else:
            doc.fail(["mpc", key], "unknown setting")
    try:
        cbf = CbfParams(**cbf_kw)
        return MpcConfig.for_dimension(dim, cbf=cbf, qp_settings=QpSettings(**qp_kw), **mpc_kw)
    except (TypeError, ValueError) as exc:
        doc.fail(["mpc"], str(exc), ValidationError)


def _robot(doc, i, entry, dim, n_states):
    path = ["robots", i]
    if not isinstance(entry, dict):
        doc.fail(path, "expected a mapping")
    shape_entry = entry.get("shape")
    scale = float(entry.get("scale", 1.0))
    if isinstance(shape_entry, str):
        if shape_entry not in SHAPES:
            doc.fail(path + ["shape"], f"unknown shape {shape_entry!r}; built-ins: {sorted(SHAPES)}",
                     ValidationError)
        shape = builtin_shape(shape_entry, scale)
        shape_name = shape_entry
    elif isinstance(shape_entry, dict) and "pieces" in shape_entry:
        pieces = [_polytope(doc, path + ["shape", "pieces", j], p, dim)
                  for j, p in enumerate(shape_entry["pieces"])]
        shape = RobotShape(pieces, name=str(shape_entry.get("name", "custom")))
        if scale != 1.0:
            shape = shape.scaled(scale)
        shape_name = shape.name
    else:
        doc.fail(path + ["shape"], "expected a built-in shape name or {pieces: [...]}")
    if shape.dim != dim:
        doc.fail(path + ["shape"], f"shape is {shape.dim}-D in a {dim}-D scenario", ValidationError)
    x0 = _vector(doc, path + ["initial_state"], entry.get("initial_state"), n_states)
    goal = _vector(doc, path + ["goal"], entry.get("goal"), dim)
    return RobotSpec(str(entry.get("name", f"robot{i}")), shape, shape_name, x0, goal,
                     float(entry.get("goal_radius", 0.05)), scale)


def parse_scenario(text: str, source: str | None = None) -> ScenarioConfig:
    doc = _Doc(text, source)
    data = doc.data
    dim = data.get("dimension")
    if dim not in (2, 3):
        doc.fail(["dimension"], "dimension must be 2 or 3")
    n_states = 4 if dim == 2 else 6
    bounds = data.get("bounds") or {}
    lower = _vector(doc, ["bounds", "lower"], bounds.get("lower"), dim)
    upper = _vector(doc, ["bounds", "upper"], bounds.get("upper"), dim)
    if np.any(lower >= upper):
        doc.fail(["bounds"], "lower bound must be below upper bound", ValidationError)
    obstacles = [_polytope(doc, ["obstacles", i], e, dim) for i, e in enumerate(data.get("obstacles") or [])]
    robots_raw = data.get("robots")
    if not isinstance(robots_raw, list) or not robots_raw:
        doc.fail(["robots"], "at least one robot is required")
    robots = [_robot(doc, i, e, dim, n_states) for i, e in enumerate(robots_raw)]
    mpc = _mpc_config(doc, data.get("mpc"), dim)
    pl = data.get("planner") or {}
    planner = PlannerSpec(float(pl.get("resolution", 0.015 if dim == 2 else 0.03)),
                          None if pl.get("inflation") is None else float(pl["inflation"]))
    if planner.resolution <= 0:
        doc.fail(["planner", "resolution"], "resolution must be positive", ValidationError)
    cfg = ScenarioConfig(str(data.get("name", Path(source).stem if source else "scenario")), dim, lower, upper,
                         obstacles, robots, mpc, planner, int(data.get("seed", 0)),
                         int(data.get("max_steps", 400)), str(data.get("description", "")), source)
    validate(cfg, doc)
    return cfg


def validate(cfg: ScenarioConfig, doc: _Doc | None = None):
    """Reject colliding initial states and duplicate goals."""
    from ..dynamics import make_model

    model = make_model(cfg.dimension, cfg.mpc.dt if cfg.mpc.dt else DEFAULT_DT)

    def fail(path, msg):
        if doc is not None:
            doc.fail(path, msg, ValidationError)
        raise ValidationError(msg)

    for i, r in enumerate(cfg.robots):
        d = min_distance(r.shape, r.initial_state, cfg.obstacles, model)
        if d <= 0:
            fail(["robots", i, "initial_state"], f"robot {r.name!r} starts in collision (distance {d:.4g})")
    from ..geometry import Pose, pose_to_world, signed_distance

    feet = [pose_to_world(r.shape, Pose(r.initial_state[list(model.position_indices)],
                                        r.initial_state[list(model.angle_indices)])) for r in cfg.robots]
    for i in range(len(feet)):
        for j in range(i + 1, len(feet)):
            if min(signed_distance(a, b) for a in feet[i] for b in feet[j]) <= 0:
                fail(["robots", j, "initial_state"], f"robots {cfg.robots[i].name!r} and "
                                                      f"{cfg.robots[j].name!r} overlap at start")
            if np.allclose(cfg.robots[i].goal, cfg.robots[j].goal):
                fail(["robots", j, "goal"], "robots must have distinct goals")


def builtin_scenarios() -> list[str]:
    root = resources.files("polynav") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def resolve_scenario(name_or_path) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    cand = resources.files("polynav") / "scenarios" / f"{p.stem}.yaml"
    if cand.is_file():
        return Path(str(cand))
    raise FileNotFoundError(f"no scenario file or built-in named {name_or_path!r}")


def load_scenario(file) -> ScenarioConfig:
    """Load and validate a scenario from a path or a built-in scenario name."""
    path = resolve_scenario(file)
    try:
        return parse_scenario(path.read_text(), str(path))
    except DimensionMismatch as exc:
        raise ValidationError(f"{path}: {exc}") from None
