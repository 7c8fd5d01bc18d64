"""Iterative convex MPC with barrier constraints from supporting hyperplanes.

At each time step the controller repeatedly linearizes the dynamics and the
robot geometry around a nominal trajectory, solves one convex QP (the CFTOC)
and replaces the nominal with the optimum until the state sequence stops
moving.  Only the first input is applied.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import dynamics as dyn
from .cbf import CbfParams, DcbfRow, build_dcbf_rows
from .errors import DegenerateContact, DimensionMismatch, Infeasible, SolverFailure
from .geometry import (
    DEGENERACY_THRESHOLD,
    Pose,
    RobotShape,
    box_intersects,
    closest_points_batch,
    penetration_depth,
    point_map,
    pose_to_world,
    supporting_hyperplane,
)
from .planner import ReferencePath, local_reference
from .qp import QpProblem, QpSettings, QpStatus, solve

SAFETY_TOLERANCE = 1e-9


@dataclass
class MpcConfig:
    """Controller settings.  Use :meth:`for_dimension` for defaults."""

    horizon: int = 12
    q_weights: np.ndarray = None
    r_weights: np.ndarray = None
    s_weight: float = 10.0
    p_weights: np.ndarray = None
    state_bounds: tuple = None
    input_bounds: tuple = None
    eps_abs: float = 0.05
    eps_rel: float = 1e-2
    j_max: int = 50
    sensing_radius: float = 0.3
    cbf: CbfParams = field(default_factory=CbfParams)
    qp_settings: QpSettings = field(default_factory=QpSettings)
    goal_radius: float = 0.05
    ref_speed: float = 0.2
    ref_speed_cap: float | None = None
    support_band: float = 0.02
    tangent_span: float = 0.06
    tangent_lead: float = 0.0
    safety_check: bool = True
    dt: float = dyn.DEFAULT_DT

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.j_max < 1:
            raise ValueError("j_max must be at least 1")
        if self.eps_abs <= 0 or self.eps_rel <= 0:
            raise ValueError("convergence tolerances must be positive")
        if self.sensing_radius <= 0:
            raise ValueError("sensing radius must be positive")

    @classmethod
    def for_dimension(cls, dim, **overrides):
        if dim == 2:
            base = dict(horizon=12, q_weights=[10.0, 10.0, 1.0, 1.0], r_weights=[0.1, 0.1],
                        p_weights=[100.0, 100.0, 10.0, 10.0],
                        state_bounds=(-2.0 * np.ones(4), 2.0 * np.ones(4)),
                        input_bounds=(-0.5 * np.ones(2), 0.5 * np.ones(2)),
                        sensing_radius=0.3)
        elif dim == 3:
            base = dict(horizon=8, q_weights=[10.0, 10.0, 10.0, 1.0, 1.0, 1.0],
                        r_weights=[0.1, 0.1, 0.1], p_weights=[100.0, 100.0, 100.0, 10.0, 10.0, 10.0],
                        state_bounds=(-4.0 * np.ones(6), 4.0 * np.ones(6)),
                        input_bounds=(-0.5 * np.ones(3), 0.5 * np.ones(3)),
                        sensing_radius=0.35)
        else:
            raise ValueError(f"unsupported dimension {dim}")
        base.update(overrides)
        cfg = cls(**base)
        if cfg.p_weights is None:
            cfg.p_weights = cfg.q_weights
        return cfg

    def matrices(self, model):
        n, m = model.n_states, model.n_inputs
        Q = np.diag(np.broadcast_to(np.asarray(self.q_weights, float), (n,)))
        R = np.diag(np.broadcast_to(np.asarray(self.r_weights, float), (m,)))
        pw = self.q_weights if self.p_weights is None else self.p_weights
        P = np.diag(np.broadcast_to(np.asarray(pw, float), (n,)))
        return Q, R, P

    def bounds(self, model):
        n, m = model.n_states, model.n_inputs
        xs = self.state_bounds or (np.full(n, -np.inf), np.full(n, np.inf))
        us = self.input_bounds or (np.full(m, -np.inf), np.full(m, np.inf))
        xs = tuple(np.broadcast_to(np.asarray(b, float), (n,)) for b in xs)
        us = tuple(np.broadcast_to(np.asarray(b, float), (m,)) for b in us)
        if np.any(us[0] > us[1]) or np.any(xs[0] > xs[1]):
            raise Infeasible("empty state or input bounds")
        return xs, us


@dataclass
class NominalTrajectory:
    states: np.ndarray
    inputs: np.ndarray

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        if len(self.states) != len(self.inputs) + 1:
            raise DimensionMismatch("need one more state than inputs")

    @property
    def horizon(self) -> int:
        return len(self.inputs)

    def copy(self):
        return NominalTrajectory(self.states.copy(), self.inputs.copy())


@dataclass
class World:
    """Static obstacles plus obstacles that move along the horizon.

    ``moving`` maps a key to a list of polytopes indexed by horizon step;
    steps past the end of a list reuse its last entry.
    """

    obstacles: list
    moving: dict = field(default_factory=dict)

    def at_step(self, k):
        out = list(enumerate(self.obstacles))
        for key, seq in self.moving.items():
            if seq:
                out.append((key, seq[min(k, len(seq) - 1)]))
        return out

    def with_moving(self, moving):
        return World(self.obstacles, dict(moving))


@dataclass
class CftocProblem:
    """Assembled QP with the variable layout ``[x_1..x_N | u_0..u_{N-1} | w]``."""

    qp: QpProblem
    horizon: int
    n_states: int
    n_inputs: int
    rows: list

    @property
    def n_slacks(self) -> int:
        return len(self.rows)

    def unpack(self, z, x0):
        N, n, m = self.horizon, self.n_states, self.n_inputs
        X = np.vstack([x0, z[:N * n].reshape(N, n)])
        U = z[N * n:N * (n + m)].reshape(N, m)
        W = z[N * (n + m):]
        return X, U, W


@dataclass
class IterationResult:
    states: np.ndarray
    inputs: np.ndarray
    omegas: np.ndarray
    qp_status: QpStatus
    e_abs: float
    e_rel: float
    solve_time: float
    rows: list = field(default_factory=list, repr=False)
    safe: bool = True


@dataclass
class StepDiagnostics:
    iterations: int = 0
    solve_time: float = 0.0
    qp_times: list = field(default_factory=list)
    min_distance: float = np.inf
    active_obstacles: int = 0
    converged: bool = False
    fallback: str | None = None
    e_abs: float = np.nan
    e_rel: float = np.nan


def convergence(x_star, x_bar):
    """Frobenius distance between state sequences and its ratio to ``|x_bar|``."""
    x_star = np.asarray(x_star, dtype=float)
    x_bar = np.asarray(x_bar, dtype=float)
    if x_star.shape != x_bar.shape:
        raise DimensionMismatch("state sequences differ in shape")
    e_abs = float(np.linalg.norm(x_star - x_bar))
    nb = float(np.linalg.norm(x_bar))
    e_rel = e_abs / nb if nb >= 1e-12 else np.inf
    return e_abs, e_rel


def assemble_cftoc(x0, nominal: NominalTrajectory, linearized, dcbf_rows, config: MpcConfig,
                   reference, model) -> CftocProblem:
    """Build the convex QP for one iteration.

    Cost: sum over k of ``|x_k - x_r,k|_Q^2`` (terminal weight P),
    ``|u_k|_R^2`` and ``S (w - w_ref)^2``.  Constraints: linearized dynamics,
    box bounds on states, inputs and slacks, and one barrier row per slack.
    """
    N, n, m = nominal.horizon, model.n_states, model.n_inputs
    reference = np.asarray(reference, dtype=float)
    if len(linearized) != N or reference.shape != (N + 1, n) or nominal.states.shape[1] != n:
        raise DimensionMismatch("nominal, linearization and reference lengths disagree")
    x0 = np.asarray(x0, dtype=float)
    Q, R, P = config.matrices(model)
    (xlo, xhi), (ulo, uhi) = config.bounds(model)
    cbf = config.cbf
    ns = len(dcbf_rows)
    nx, nu = N * n, N * m
    nz = nx + nu + ns

    # cost
    H_blocks = [2.0 * Q] * (N - 1) + [2.0 * P] + [2.0 * R] * N + [2.0 * config.s_weight * np.eye(ns)]
    H = sp.block_diag([b for b in H_blocks if b.size], format="csc")
    f = np.zeros(nz)
    for k in range(1, N + 1):
        W = P if k == N else Q
        f[(k - 1) * n:k * n] = -2.0 * W @ reference[k]
    f[nx + nu:] = -2.0 * config.s_weight * cbf.omega_ref

    # dynamics: x_{k+1} - A_k x_k - B_k u_k = f(xb_k, ub_k) - A_k xb_k - B_k ub_k
    rows, cols, vals = [], [], []

    def put(r0, c0, block):
        rr, cc = np.nonzero(block)
        rows.extend(rr + r0)
        cols.extend(cc + c0)
        vals.extend(block[rr, cc])

    rhs = np.zeros(nx)
    for k, lin in enumerate(linearized):
        A, B = lin.a_matrix, lin.b_matrix
        r0 = k * n
        put(r0, k * n, np.eye(n))
        put(r0, nx + k * m, -B)
        c = model.step(lin.nominal_state, lin.nominal_input) - A @ lin.nominal_state - B @ lin.nominal_input
        if k == 0:
            c = c + A @ x0
        else:
            put(r0, (k - 1) * n, -A)
        rhs[r0:r0 + n] = c
    Aeq = sp.csr_matrix((vals, (rows, cols)), shape=(nx, nz))

    # barrier rows
    if ns:
        drows = np.zeros((ns, nz))
        dlo = np.empty(ns)
        for i, row in enumerate(dcbf_rows):
            k = row.step
            drows[i, (k - 1) * n:k * n] = row.state_coeffs
            drows[i, nx + nu + i] = row.slack_coeff
            dlo[i] = row.lower
        Acbf = sp.csr_matrix(drows)
    else:
        Acbf = sp.csr_matrix((0, nz))
        dlo = np.zeros(0)

    A_all = sp.vstack([Aeq, sp.identity(nz, format="csr"), Acbf], format="csc")
    lo = np.concatenate([rhs, np.tile(xlo, N), np.tile(ulo, N), np.full(ns, cbf.omega_min), dlo])
    hi = np.concatenate([rhs, np.tile(xhi, N), np.tile(uhi, N), np.full(ns, cbf.omega_max),
                         np.full(ns, np.inf)])
    return CftocProblem(QpProblem(H, f, A_all, lo, hi), N, n, m, list(dcbf_rows))


# -- geometry helpers -------------------------------------------------------------

def _pose(state, model):
    return Pose(state[list(model.position_indices)], state[list(model.angle_indices)])


def min_distance(shape: RobotShape, state, obstacles, model) -> float:
    """Exact signed distance from the posed robot to the nearest obstacle."""
    if not obstacles:
        return np.inf
    pieces = pose_to_world(shape, _pose(np.asarray(state, float), model))
    pairs = [(o, p) for o in obstacles for p in pieces]
    res = closest_points_batch(pairs)
    best = np.inf
    for (o, p), r in zip(pairs, res):
        d = r.distance
        if d <= 1e-7:
            d = -penetration_depth(o, p)
        best = min(best, d)
    return float(best)


def _nearby(world_items, position, radius):
    return [(key, poly) for key, poly in world_items if box_intersects(poly, position, radius)]


class HyperplaneCache:
    """Last good hyperplane per ``(obstacle key, piece, step)``."""

    def __init__(self):
        self.planes = {}

    def get(self, key, k):
        return self.planes.get((key, k))

    def put(self, key, k, plane):
        self.planes[(key, k)] = plane

    def shift(self):
        """Move entries one step earlier for the next time step."""
        self.planes = {(key, k - 1): p for (key, k), p in self.planes.items() if k > 1}


def _support_map(plane, piece_world, pose):
    """Point map of the piece vertex deepest along ``-n``."""
    v = piece_world.vertices
    return point_map(v[int(np.argmin(v @ plane.normal))], pose)


def build_constraints(x0, nominal: NominalTrajectory, world: World, shape: RobotShape, config: MpcConfig,
                      model, cache: HyperplaneCache | None = None):
    """Barrier rows for one iteration plus the number of active obstacles."""
    cache = cache if cache is not None else HyperplaneCache()
    N = nominal.horizon
    eps = config.cbf.epsilon
    poses = [_pose(np.asarray(x0, float), model)] + [_pose(s, model) for s in nominal.states[1:]]
    worlds = [pose_to_world(shape, p) for p in poses]

    requests = []  # (k, obstacle key, piece index, obstacle poly)
    keys = set()
    for k in range(1, N + 1):
        for key, poly in _nearby(world.at_step(k), poses[k].position, config.sensing_radius):
            keys.add(key)
            for pi in range(len(shape.pieces)):
                requests.append((k, key, pi, poly))
    if not requests:
        return [], 0
    step0 = dict(world.at_step(0))
    for key in sorted(keys, key=repr):
        for pi in range(len(shape.pieces)):
            requests.append((0, key, pi, step0[key]))
    pairs = closest_points_batch([(poly, worlds[k][pi]) for k, key, pi, poly in requests])

    psi_now, plane_now = {}, {}
    for (k, key, pi, _), pr in zip(requests, pairs):
        if k == 0:
            psi_now[(key, pi)] = pr.distance - eps
            if pr.distance >= DEGENERACY_THRESHOLD:
                plane_now[(key, pi)] = supporting_hyperplane(pr, eps)

    per_step = [[] for _ in range(N)]
    for (k, key, pi, _), pr in zip(requests, pairs):
        if k == 0:
            continue
        rk = (key, pi)
        piece = worlds[k][pi]
        if pr.distance >= DEGENERACY_THRESHOLD:
            plane = supporting_hyperplane(pr, eps)
            cache.put(rk, k, plane)
            pmap = point_map(pr.point_on_robot, poses[k])
        else:
            plane = cache.get(rk, k) or plane_now.get(rk)
            if plane is None:
                raise DegenerateContact(f"no separating plane for obstacle {key!r} at step {k}")
            pmap = _support_map(plane, piece, poses[k])
        per_step[k - 1].append((rk, plane, pmap))
        if config.support_band > 0:
            v = piece.vertices
            gap = (v - plane.anchor) @ plane.normal - pr.distance
            for vi in np.flatnonzero(gap <= config.support_band):
                if np.linalg.norm(v[vi] - pr.point_on_robot) > 1e-9:
                    per_step[k - 1].append(((key, pi, int(vi)), plane, point_map(v[vi], poses[k])))

    psi_all = dict(psi_now)
    for entries in per_step:
        for rk, _, _ in entries:
            if rk not in psi_all:
                psi_all[rk] = psi_now[rk[:2]]
    rows = build_dcbf_rows(per_step, psi_all, config.cbf, model)
    return rows, len(keys)


def iterate(x0, warm: NominalTrajectory, world: World, config: MpcConfig, *, model, shape: RobotShape,
            reference, cache: HyperplaneCache | None = None):
    """Run the linearize/solve loop for one time step.

    Returns the last optimum and the step diagnostics.  The result's
    ``qp_status`` is not Optimal when the very first solve failed; a later
    failure returns the last successful iterate.
    """
    x0 = np.asarray(x0, dtype=float)
    nominal = warm.copy()
    nominal.states[0] = x0
    diag = StepDiagnostics()
    t_start = time.perf_counter()
    best = None
    warm_z = None
    for j in range(config.j_max):
        rows, n_active = build_constraints(x0, nominal, world, shape, config, model, cache)
        diag.active_obstacles = max(diag.active_obstacles, n_active)
        lin = [dyn.linearize(model, nominal.states[k], nominal.inputs[k], nominal.states[k + 1])
               for k in range(nominal.horizon)]
        prob = assemble_cftoc(x0, nominal, lin, rows, config, reference, model)
        if warm_z is not None and len(warm_z) != prob.qp.num_vars:
            warm_z = np.concatenate([warm_z[:prob.qp.num_vars - prob.n_slacks],
                                     np.ones(prob.n_slacks)])
        sol = solve(prob.qp, config.qp_settings, warm_z)
        diag.qp_times.append(sol.solve_time)
        diag.iterations = j + 1
        if not sol.optimal:
            if best is None:
                best = IterationResult(nominal.states, nominal.inputs, np.zeros(0), sol.status,
                                       np.inf, np.inf, sol.solve_time, rows, safe=False)
            break
        X, U, W = prob.unpack(sol.primal, x0)
        e_abs, e_rel = convergence(X, nominal.states)
        best = IterationResult(X, U, W, sol.status, e_abs, e_rel, sol.solve_time, rows)
        diag.e_abs, diag.e_rel = e_abs, e_rel
        done = e_abs < config.eps_abs or e_rel < config.eps_rel
        if done and config.safety_check:
            best.safe = _first_step_safe(X[1], world, shape, config, model)
            done = best.safe
        nominal = NominalTrajectory(X, U)
        warm_z = sol.primal
        if done:
            diag.converged = True
            break
    if best is not None and best.qp_status is QpStatus.OPTIMAL and not diag.converged and config.safety_check:
        best.safe = _first_step_safe(best.states[1], world, shape, config, model)
    diag.solve_time = time.perf_counter() - t_start
    return best, diag


def _first_step_safe(x1, world, shape, config, model):
    items = _nearby(world.at_step(1), x1[list(model.position_indices)],
                    config.sensing_radius + shape.circumscribed_radius)
    return min_distance(shape, x1, [p for _, p in items], model) >= -SAFETY_TOLERANCE


# -- closed loop ----------------------------------------------------------------------

class Controller:
    """Receding-horizon controller for one robot following a reference path."""

    def __init__(self, model, shape: RobotShape, path: ReferencePath, goal, config: MpcConfig,
                 initial_state, world: World | None = None, name="robot"):
        self.model = model
        self.shape = shape
        self.path = path
        self.goal = np.asarray(goal, dtype=float)
        self.config = config
        self.name = name
        self.state = np.asarray(initial_state, dtype=float)
        self.ref_speed = max(float(self.state[model.speed_index]), config.ref_speed)
        self.s_hint = None
        self.cache = HyperplaneCache()
        self.prev_input = np.zeros(model.n_inputs)
        self.nominal = self._initial_nominal(world)
        self.last_reference = None
        self.last_plan = self.nominal.states.copy()
        self.last_omegas = np.zeros(0)

    def _initial_nominal(self, world):
        N, m = self.config.horizon, self.model.n_inputs
        inputs = np.zeros((N, m))
        states = dyn.rollout(self.model, self.state, inputs)
        if world is not None:
            obs = [p for _, p in world.at_step(0)]
            if any(min_distance(self.shape, s, obs, self.model) < 0 for s in states[1:]):
                states = np.tile(self.state, (N + 1, 1))
        return NominalTrajectory(states, inputs)

    @property
    def position(self):
        return self.state[list(self.model.position_indices)]

    def at_goal(self) -> bool:
        return bool(np.linalg.norm(self.position - self.goal) <= self.config.goal_radius)

    def footprint(self, state=None):
        state = self.state if state is None else state
        return pose_to_world(self.shape, _pose(np.asarray(state, float), self.model))

    def predicted_footprints(self):
        """World pieces at each step of the plan made at the current time step."""
        return [self.footprint(s) for s in self.last_plan]

    def step(self, world: World):
        """Plan, apply the first input, and return ``(u, next_state, diagnostics)``."""
        model, cfg = self.model, self.config
        if self.at_goal():
            self.last_plan = np.tile(self.state, (cfg.horizon + 1, 1))
            return np.zeros(model.n_inputs), self.state.copy(), StepDiagnostics(converged=True, fallback="goal")
        refs, self.s_hint = local_reference(self.path, self.state, self.ref_speed, cfg.horizon, cfg.dt,
                                            model, s_hint=self.s_hint, tangent_span=cfg.tangent_span,
                                            tangent_lead=cfg.tangent_lead)
        self.last_reference = refs
        (xlo, xhi), (ulo, uhi) = cfg.bounds(model)
        applied, diag = self._plan(self.nominal, world, refs, ulo, uhi)
        if applied is None:
            # Re-linearize around a brake-and-hold nominal before giving up on the QP.
            applied, retry = self._plan(self._braking_nominal(), world, refs, ulo, uhi)
            retry.iterations += diag.iterations
            retry.qp_times = diag.qp_times + retry.qp_times
            retry.solve_time += diag.solve_time
            diag = retry
            if applied is not None:
                diag.fallback = "relinearized"
        if applied is None:
            applied = self._fallback(world, diag, ulo, uhi)
        u, nxt = applied
        diag.min_distance = min_distance(self.shape, nxt, [p for _, p in world.at_step(1)], model)
        self.cache.shift()
        self.prev_input = u
        self.state = nxt
        v = float(nxt[model.speed_index])
        self.ref_speed = max(v, cfg.ref_speed)
        if cfg.ref_speed_cap is not None:
            self.ref_speed = min(self.ref_speed, cfg.ref_speed_cap)
        return u, nxt, diag

    def _plan(self, warm, world, refs, ulo, uhi):
        model = self.model
        try:
            result, diag = iterate(self.state, warm, world, self.config, model=model, shape=self.shape,
                                   reference=refs, cache=self.cache)
        except (DegenerateContact, SolverFailure):
            return None, StepDiagnostics()
        if result is None or result.qp_status is not QpStatus.OPTIMAL or not result.safe:
            return None, diag
        u = np.clip(result.inputs[0], ulo, uhi)
        nxt = model.step(self.state, u)
        if not self._safe(nxt, world):
            return None, diag
        X, U = result.states, result.inputs
        self.last_plan = X.copy()
        self.last_omegas = result.omegas.copy()
        states = np.vstack([X[1:], model.step(X[-1], U[-1])])
        states[0] = nxt
        self.nominal = NominalTrajectory(states, np.vstack([U[1:], U[-1:]]))
        return (u, nxt), diag

    def _braking_nominal(self):
        """Decelerate as hard as allowed, then hold."""
        model = self.model
        _, (ulo, uhi) = self.config.bounds(model)
        inputs = np.zeros((self.config.horizon, model.n_inputs))
        x = self.state.copy()
        states = [x]
        for k in range(self.config.horizon):
            v = x[model.speed_index]
            inputs[k, -1] = np.clip(-v / model.dt, ulo[-1], uhi[-1])
            x = model.step(x, inputs[k])
            states.append(x)
        return NominalTrajectory(np.array(states), inputs)

    def _commit_fallback(self, name, u, nxt, diag):
        diag.fallback = name
        self.last_omegas = np.zeros(0)
        self.last_plan = np.vstack([self.state, self._hold_from(nxt)[:-1]])
        inputs = np.zeros((self.config.horizon, self.model.n_inputs))
        self.nominal = NominalTrajectory(dyn.rollout(self.model, nxt, inputs), inputs)
        return u, nxt

    def _hold_from(self, x):
        return dyn.rollout(self.model, x, np.zeros((self.config.horizon, self.model.n_inputs)))

    def _safe(self, state, world):
        (xlo, xhi), _ = self.config.bounds(self.model)
        if np.any(state < xlo - 1e-9) or np.any(state > xhi + 1e-9):
            return False
        return _first_step_safe(state, world, self.shape, self.config, self.model)

    def _fallback(self, world, diag, ulo, uhi):
        """Input ladder used when no QP solution can be applied.

        Half the previous input, then zero input, then hard braking combined
        with the turn rate (from a small grid) that leaves the most clearance.
        """
        model = self.model
        v = float(self.state[model.speed_index])
        ladder = [("half-previous", 0.5 * self.prev_input), ("zero", np.zeros(model.n_inputs))]
        for name, u in ladder:
            u = np.clip(u, ulo, uhi)
            nxt = model.step(self.state, u)
            if self._safe(nxt, world):
                return self._commit_fallback(name, u, nxt, diag)
        best = None
        n_turn = model.n_inputs - 1
        grid = np.linspace(-1.0, 1.0, 5)
        obstacles = [p for _, p in world.at_step(1)]
        for turn in itertools.product(grid, repeat=n_turn):
            u = np.empty(model.n_inputs)
            u[:n_turn] = np.where(np.asarray(turn) < 0, -np.asarray(turn) * ulo[:n_turn],
                                  np.asarray(turn) * uhi[:n_turn])
            u[-1] = -v / model.dt
            u = np.clip(u, ulo, uhi)
            nxt = model.step(self.state, u)
            if not self._safe(nxt, world):
                continue
            d = min_distance(self.shape, nxt, obstacles, model)
            if best is None or d > best[0]:
                best = (d, u, nxt)
        if best is not None:
            return self._commit_fallback("brake", best[1], best[2], diag)
        raise Infeasible(f"{self.name}: no safe input at state {np.array2string(self.state, precision=4)}")
