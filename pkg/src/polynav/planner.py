"""Grid A* for the global reference path and local reference sampling."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import NoPath
from .geometry import Polytope, closest_points_batch


class GridMap:
    """Occupancy grid over an axis-aligned region.

    ``occupied[idx]`` is true when the cell center lies within
    ``inflation`` of some obstacle, or the obstacle itself.
    """

    def __init__(self, occupied, lower, resolution):
        self.occupied = np.asarray(occupied, dtype=bool)
        self.lower = np.asarray(lower, dtype=float)
        self.resolution = float(resolution)

    @classmethod
    def empty(cls, shape, resolution=1.0, lower=None):
        lower = np.zeros(len(shape)) if lower is None else lower
        return cls(np.zeros(shape, dtype=bool), lower, resolution)

    @classmethod
    def from_obstacles(cls, obstacles, lower, upper, resolution, inflation=0.0):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        shape = tuple(int(np.ceil((hi - lo) / resolution)) for lo, hi in zip(lower, upper))
        axes = [lower[d] + (np.arange(shape[d]) + 0.5) * resolution for d in range(len(shape))]
        centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(shape))
        occ = np.zeros(len(centers), dtype=bool)
        for obs in obstacles:
            occ |= _within(obs, centers, inflation)
        return cls(occ.reshape(shape), lower, resolution)

    @property
    def shape(self):
        return self.occupied.shape

    @property
    def dim(self):
        return self.occupied.ndim

    def cell_center(self, idx):
        return self.lower + (np.asarray(idx, dtype=float) + 0.5) * self.resolution

    def cell_of(self, point):
        idx = np.floor((np.asarray(point, float) - self.lower) / self.resolution).astype(int)
        return tuple(int(i) for i in np.clip(idx, 0, np.array(self.shape) - 1))

    def in_bounds(self, idx):
        return all(0 <= i < s for i, s in zip(idx, self.shape))

    def is_free(self, idx):
        return self.in_bounds(idx) and not self.occupied[tuple(idx)]

    def nearest_free(self, idx):
        """Breadth-first search for the closest free cell."""
        if self.is_free(idx):
            return tuple(idx)
        seen = {tuple(idx)}
        frontier = [tuple(idx)]
        moves = _moves(self.dim)
        while frontier:
            nxt = []
            for c in frontier:
                for mv, _, _ in moves:
                    nb = tuple(a + b for a, b in zip(c, mv))
                    if nb in seen or not self.in_bounds(nb):
                        continue
                    if not self.occupied[nb]:
                        return nb
                    seen.add(nb)
                    nxt.append(nb)
            frontier = nxt
        raise NoPath("grid has no free cell")


def _within(obs: Polytope, pts, radius):
    """Mask of points within ``radius`` of the polytope."""
    if obs.is_axis_aligned_box:
        lo, hi = obs.bounds
        gap = np.maximum(np.maximum(lo - pts, pts - hi), 0.0)
        return np.linalg.norm(gap, axis=1) <= radius
    inside = np.all(pts @ obs.a_matrix.T <= obs.b_vector + 1e-12, axis=1)
    # Points within a facet-offset band may be close; resolve those exactly.
    near = ~inside & np.all(pts @ obs.a_matrix.T <= obs.b_vector + radius + 1e-12, axis=1)
    idx = np.flatnonzero(near)
    if idx.size:
        if obs.dim == 2:
            d = _polygon_distance(obs, pts[idx])
        else:
            tiny = [Polytope.from_box(p - 1e-9, p + 1e-9) for p in pts[idx]]
            d = np.array([pr.distance for pr in closest_points_batch([(obs, t) for t in tiny])])
        inside[idx] = d <= radius
    return inside


def _polygon_distance(obs, pts):
    v = obs.vertices
    c = v.mean(axis=0)
    order = np.argsort(np.arctan2(v[:, 1] - c[1], v[:, 0] - c[0]))
    a = v[order]
    b = np.roll(a, -1, axis=0)
    ab = b - a
    t = np.clip(np.einsum("pkd,kd->pk", pts[:, None, :] - a[None], ab) / np.einsum("kd,kd->k", ab, ab), 0, 1)
    proj = a[None] + t[..., None] * ab[None]
    return np.linalg.norm(pts[:, None, :] - proj, axis=2).min(axis=1)


def _moves(dim):
    """Unit-step moves with their length class and the cells they sweep."""
    out = []
    for mv in itertools.product((-1, 0, 1), repeat=dim):
        nz = sum(1 for c in mv if c)
        if nz == 0:
            continue
        # Every axis-aligned sub-move must be free: no corner cutting.
        subs = []
        for mask in itertools.product((0, 1), repeat=dim):
            sub = tuple(c * m for c, m in zip(mv, mask))
            if any(sub):
                subs.append(sub)
        out.append((mv, nz, subs))
    return out


_STEP_LENGTH = {1: 1.0, 2: np.sqrt(2.0), 3: np.sqrt(3.0)}


def octile(a, b):
    d = sorted((abs(x - y) for x, y in zip(a, b)), reverse=True)
    d += [0] * (3 - len(d))
    return d[0] + (np.sqrt(2.0) - 1.0) * d[1] + (np.sqrt(3.0) - np.sqrt(2.0)) * d[2]


@dataclass
class ReferencePath:
    """Polyline of world waypoints with cumulative arc length."""

    waypoints: np.ndarray
    cells: list = None
    move_counts: tuple = (0, 0, 0)

    def __post_init__(self):
        self.waypoints = np.atleast_2d(np.asarray(self.waypoints, dtype=float))
        seg = np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)
        self.arc_length = np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def length(self) -> float:
        return float(self.arc_length[-1])

    @property
    def cost(self) -> float:
        """Path cost in cell units computed from exact move counts."""
        a, b, c = self.move_counts
        return a + b * np.sqrt(2.0) + c * np.sqrt(3.0)

    def point_at(self, s):
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.length)
        out = np.empty(s.shape + (self.waypoints.shape[1],))
        for d in range(self.waypoints.shape[1]):
            out[..., d] = np.interp(s, self.arc_length, self.waypoints[:, d])
        return out

    def project(self, point, s_min=0.0, s_max=np.inf) -> float:
        """Arc length of the closest path point with ``s_min <= s <= s_max``."""
        p = np.asarray(point, dtype=float)
        a, b = self.waypoints[:-1], self.waypoints[1:]
        if len(a) == 0:
            return 0.0
        ab = b - a
        ll = np.einsum("kd,kd->k", ab, ab)
        t = np.where(ll > 0, np.einsum("kd,kd->k", p - a, ab) / np.where(ll > 0, ll, 1.0), 0.0)
        s_seg = self.arc_length[:-1]
        seg_len = np.sqrt(ll)
        lo = np.clip((s_min - s_seg) / np.where(seg_len > 0, seg_len, 1.0), 0.0, 1.0)
        hi = np.clip((s_max - s_seg) / np.where(seg_len > 0, seg_len, 1.0), 0.0, 1.0)
        valid = hi >= lo
        t = np.clip(t, lo, hi)
        d = np.linalg.norm(a + t[:, None] * ab - p, axis=1)
        d[~valid] = np.inf
        k = int(np.argmin(d))
        return float(s_seg[k] + t[k] * seg_len[k])


def astar(grid: GridMap, start, goal) -> ReferencePath:
    """Minimal-cost 8-connected (26 in 3-D) path between two free cells."""
    start, goal = tuple(start), tuple(goal)
    if not grid.is_free(start) or not grid.is_free(goal):
        raise NoPath("start or goal cell is occupied")
    moves = _moves(grid.dim)
    occ = grid.occupied
    shape = grid.shape
    g = {start: 0.0}
    counts = {start: (0, 0, 0)}
    parent = {start: None}
    tie = itertools.count()
    heap = [(octile(start, goal), next(tie), start)]
    closed = set()
    while heap:
        _, _, cur = heapq.heappop(heap)
        if cur in closed:
            continue
        if cur == goal:
            break
        closed.add(cur)
        gc = g[cur]
        for mv, nz, subs in moves:
            nb = tuple(c + m for c, m in zip(cur, mv))
            if not all(0 <= i < s for i, s in zip(nb, shape)) or nb in closed:
                continue
            if any(occ[tuple(c + m for c, m in zip(cur, sub))] for sub in subs):
                continue
            ng = gc + _STEP_LENGTH[nz]
            if ng < g.get(nb, np.inf) - 1e-12:
                g[nb] = ng
                cnt = list(counts[cur])
                cnt[nz - 1] += 1
                counts[nb] = tuple(cnt)
                parent[nb] = cur
                heapq.heappush(heap, (ng + octile(nb, goal), next(tie), nb))
    if goal not in parent:
        raise NoPath(f"no path from {start} to {goal}")
    cells = [goal]
    while parent[cells[-1]] is not None:
        cells.append(parent[cells[-1]])
    cells.reverse()
    pts = np.array([grid.cell_center(c) for c in cells])
    return ReferencePath(pts, cells, counts[goal])


def plan_path(grid: GridMap, start_point, goal_point) -> ReferencePath:
    """A* between world points, snapping blocked endpoints to the nearest free cell.

    The exact start and goal points are kept as the path's end waypoints.
    """
    s_cell = grid.nearest_free(grid.cell_of(start_point))
    g_cell = grid.nearest_free(grid.cell_of(goal_point))
    path = astar(grid, s_cell, g_cell)
    pts = np.vstack([start_point, path.waypoints, goal_point])
    return ReferencePath(_drop_duplicates(pts), path.cells, path.move_counts)


def _drop_duplicates(pts, tol=1e-12):
    keep = [0]
    for i in range(1, len(pts)):
        if np.linalg.norm(pts[i] - pts[keep[-1]]) > tol:
            keep.append(i)
    return pts[keep]


def unwrap_to(angle, reference):
    """Shift ``angle`` by a multiple of 2*pi to lie within pi of ``reference``."""
    return angle + 2.0 * np.pi * np.round((reference - angle) / (2.0 * np.pi))


def local_reference(path: ReferencePath, current_state, ref_speed, horizon, dt, model,
                    s_hint=None, window=(0.1, 0.4), tangent_span=0.06, tangent_lead=0.0):
    """Reference states ``x_r[0..N]`` spaced ``ref_speed * dt`` along the path.

    Returns the ``(N + 1, n)`` reference array and the projected arc length.
    Positions beyond the path end clamp to the goal, and their speed entry
    is zero.  Headings follow the path chord of length ``tangent_span``
    centered ``tangent_lead`` ahead of each sample, and are unwrapped
    against the current heading.
    """
    x = np.asarray(current_state, dtype=float)
    pos = x[list(model.position_indices)]
    if s_hint is None:
        s0 = path.project(pos)
    else:
        s0 = path.project(pos, s_hint - window[0], s_hint + window[1])
    s = s0 + ref_speed * dt * np.arange(horizon + 1)
    clamped = s >= path.length
    s = np.minimum(s, path.length)
    refs = np.zeros((horizon + 1, model.n_states))
    refs[:, list(model.position_indices)] = path.point_at(s)
    half = 0.5 * tangent_span
    lo = np.maximum(s + tangent_lead - half, 0.0)
    hi = np.minimum(lo + tangent_span, path.length)
    lo = np.maximum(hi - tangent_span, 0.0)
    direction = path.point_at(hi) - path.point_at(lo)
    ang_idx = list(model.angle_indices)
    prev = x[ang_idx].copy()
    for k in range(horizon + 1):
        if np.linalg.norm(direction[k]) < 1e-12:
            ang = prev.copy()
        else:
            ang = model.heading_from_direction(direction[k])
            ang[0] = unwrap_to(ang[0], prev[0])
        refs[k, ang_idx] = ang
        prev = ang
    refs[:, model.speed_index] = np.where(clamped, 0.0, ref_speed)
    return refs, s0
