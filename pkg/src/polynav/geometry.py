"""Convex polytopes, rigid poses and closest-point queries.

Polytopes are stored in H-representation ``{c : A c <= b}`` with unit-norm
facet normals.  Vertices are enumerated once and carried along under rigid
motions, so posing a robot never re-enumerates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from .errors import DegenerateContact, DimensionMismatch, EmptyPolytope, SolverFailure, UnboundedPolytope
from .qp import QpProblem, QpSettings, QpStatus, solve, solve_batch

DEGENERACY_THRESHOLD = 1e-6
_CONTACT_CHECK_SQ = 1e-8
_VERTEX_TOL = 1e-9


class Polytope:
    """Bounded convex polytope ``{c : A c <= b}`` in 2-D or 3-D.

    Parameters
    ----------
    a_matrix : array_like, shape (s, l)
    b_vector : array_like, shape (s,)
    vertices : array_like, optional
        Known vertex set; skips enumeration (used for rigid transforms).
    check : bool
        Enumerate vertices and verify boundedness/non-emptiness now.
    """

    def __init__(self, a_matrix, b_vector, *, vertices=None, check=True):
        A = np.atleast_2d(np.asarray(a_matrix, dtype=float))
        b = np.asarray(b_vector, dtype=float).ravel()
        if A.shape[0] != b.size:
            raise DimensionMismatch("a_matrix and b_vector disagree on the number of facets")
        if A.shape[1] not in (2, 3):
            raise DimensionMismatch("only 2-D and 3-D polytopes are supported")
        norms = np.linalg.norm(A, axis=1)
        if np.any(norms < 1e-12):
            raise ValueError("facet normals must be nonzero")
        self.a_matrix = A / norms[:, None]
        self.b_vector = b / norms
        if vertices is not None:
            self.__dict__["vertices"] = np.asarray(vertices, dtype=float)
        elif check:
            _ = self.vertices

    @classmethod
    def from_box(cls, lower, upper):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if np.any(upper <= lower):
            raise EmptyPolytope("box upper corner must exceed the lower corner")
        dim = lower.size
        eye = np.eye(dim)
        A = np.vstack([eye, -eye])
        b = np.concatenate([upper, -lower])
        corners = np.array(list(itertools.product(*zip(lower, upper))))
        return cls(A, b, vertices=corners)

    @classmethod
    def from_vertices(cls, points):
        """Convex hull of ``points`` as an H-representation."""
        pts = np.asarray(points, dtype=float)
        hull = ConvexHull(pts)
        eq = hull.equations
        A, b = eq[:, :-1], -eq[:, -1]
        # Coplanar hull simplices produce duplicate facets in 3-D.
        keep = []
        for i in range(len(A)):
            if not any(np.allclose(A[i], A[j], atol=1e-9) and abs(b[i] - b[j]) < 1e-9 for j in keep):
                keep.append(i)
        return cls(A[keep], b[keep], vertices=pts[hull.vertices])

    @property
    def dim(self) -> int:
        return self.a_matrix.shape[1]

    @property
    def num_facets(self) -> int:
        return self.a_matrix.shape[0]

    @cached_property
    def vertices(self) -> np.ndarray:
        if not _is_bounded(self.a_matrix):
            raise UnboundedPolytope("polytope has a recession direction")
        verts = enumerate_vertices(self.a_matrix, self.b_vector)
        if len(verts) == 0:
            raise EmptyPolytope("polytope has no feasible point")
        return verts

    @cached_property
    def center(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    @cached_property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        v = self.vertices
        return v.min(axis=0), v.max(axis=0)

    @cached_property
    def is_axis_aligned_box(self) -> bool:
        A = self.a_matrix
        return bool(np.all(np.sum(np.abs(A) > 1e-12, axis=1) == 1) and len(A) == 2 * self.dim)

    @cached_property
    def edge_directions(self) -> np.ndarray:
        """Unit directions of the polytope edges (3-D only; empty in 2-D)."""
        if self.dim == 2:
            return np.zeros((0, 2))
        V = self.vertices
        tight = np.abs(V @ self.a_matrix.T - self.b_vector) <= 1e-7
        dirs = []
        for i, j in itertools.combinations(range(len(V)), 2):
            if np.count_nonzero(tight[i] & tight[j]) >= 2:
                d = V[j] - V[i]
                nrm = np.linalg.norm(d)
                if nrm > 1e-12:
                    dirs.append(d / nrm)
        return _unique_directions(np.array(dirs).reshape(-1, 3))

    def contains(self, point, tol=1e-9) -> bool:
        return bool(np.all(self.a_matrix @ np.asarray(point, float) <= self.b_vector + tol))

    def transformed(self, rotation, translation) -> "Polytope":
        """Image under ``c -> R c + p``."""
        R = np.asarray(rotation, dtype=float)
        p = np.asarray(translation, dtype=float)
        AR = self.a_matrix @ R.T
        out = Polytope(AR, self.b_vector + AR @ p, vertices=self.vertices @ R.T + p, check=False)
        if "edge_directions" in self.__dict__:
            out.__dict__["edge_directions"] = self.edge_directions @ R.T
        return out

    def translated(self, offset) -> "Polytope":
        return self.transformed(np.eye(self.dim), offset)

    def scaled(self, factor) -> "Polytope":
        """Uniform scaling about the body origin."""
        return Polytope(self.a_matrix, self.b_vector * factor, vertices=self.vertices * factor, check=False)

    def __repr__(self):
        return f"Polytope(dim={self.dim}, facets={self.num_facets})"


def enumerate_vertices(A, b, tol=_VERTEX_TOL):
    """Brute-force vertex enumeration over all l-subsets of facets."""
    s, dim = A.shape
    combos = np.array(list(itertools.combinations(range(s), dim)))
    if combos.size == 0:
        return np.zeros((0, dim))
    M = A[combos]
    rhs = b[combos]
    det = np.linalg.det(M)
    ok = np.abs(det) > 1e-12
    if not np.any(ok):
        return np.zeros((0, dim))
    pts = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
    feas = np.all(pts @ A.T <= b + tol, axis=1)
    pts = pts[feas]
    out = []
    for p in pts:
        if not any(np.max(np.abs(p - q)) <= tol for q in out):
            out.append(p)
    return np.array(out).reshape(-1, dim)


def _is_bounded(A) -> bool:
    dim = A.shape[1]
    for i in range(dim):
        for sign in (1.0, -1.0):
            c = np.zeros(dim)
            c[i] = -sign
            res = linprog(c, A_ub=A, b_ub=np.zeros(len(A)), bounds=[(-1, 1)] * dim, method="highs")
            if res.status == 0 and -res.fun > 1e-9:
                return False
    return True


def _unique_directions(dirs, tol=1e-9):
    out = []
    for d in dirs:
        if not any(abs(abs(d @ e) - 1.0) <= tol for e in out):
            out.append(d)
    return np.array(out).reshape(-1, dirs.shape[1] if dirs.ndim == 2 else 3)


# -- rotations -----------------------------------------------------------------

def rotation(theta) -> np.ndarray:
    """Rotation for a 1-angle (planar) or 2-angle (yaw, pitch) orientation.

    In 3-D ``R = Rz(yaw) @ Ry(-pitch)`` so the body x-axis maps to
    ``(cos p cos y, cos p sin y, sin p)``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.size == 1:
        c, s = np.cos(theta[0]), np.sin(theta[0])
        return np.array([[c, -s], [s, c]])
    c1, s1 = np.cos(theta[0]), np.sin(theta[0])
    c2, s2 = np.cos(theta[1]), np.sin(theta[1])
    return np.array([[c1 * c2, -s1, -c1 * s2],
                     [s1 * c2, c1, -s1 * s2],
                     [s2, 0.0, c2]])


def rotation_derivatives(theta) -> list[np.ndarray]:
    """Partial derivatives of :func:`rotation` with respect to each angle."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.size == 1:
        c, s = np.cos(theta[0]), np.sin(theta[0])
        return [np.array([[-s, -c], [c, -s]])]
    c1, s1 = np.cos(theta[0]), np.sin(theta[0])
    c2, s2 = np.cos(theta[1]), np.sin(theta[1])
    d_yaw = np.array([[-s1 * c2, -c1, s1 * s2],
                      [c1 * c2, -s1, -c1 * s2],
                      [0.0, 0.0, 0.0]])
    d_pitch = np.array([[-c1 * s2, 0.0, -c1 * c2],
                        [-s1 * s2, 0.0, -s1 * c2],
                        [c2, 0.0, -s2]])
    return [d_yaw, d_pitch]


@dataclass
class Pose:
    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).ravel()
        self.orientation = np.atleast_1d(np.asarray(self.orientation, dtype=float)).ravel()

    @cached_property
    def rotation(self) -> np.ndarray:
        return rotation(self.orientation)


@dataclass
class RobotShape:
    """Union of convex body-frame pieces; the body origin is the reference point."""

    pieces: list
    name: str = "robot"

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("a robot needs at least one piece")
        dims = {p.dim for p in self.pieces}
        if len(dims) != 1:
            raise DimensionMismatch("all pieces must share one dimension")
        for piece in self.pieces:
            _ = piece.vertices  # validates bounded, non-empty

    @property
    def dim(self) -> int:
        return self.pieces[0].dim

    @cached_property
    def circumscribed_radius(self) -> float:
        return float(max(np.linalg.norm(p.vertices, axis=1).max() for p in self.pieces))

    def scaled(self, factor) -> "RobotShape":
        return RobotShape([p.scaled(factor) for p in self.pieces], name=self.name)


def pose_to_world(shape: RobotShape, pose: Pose) -> list[Polytope]:
    R = pose.rotation
    return [piece.transformed(R, pose.position) for piece in shape.pieces]


# -- obstacle detection ----------------------------------------------------------

def _sat_axes(poly: Polytope, dim: int) -> np.ndarray:
    axes = [np.eye(dim), poly.a_matrix]
    if dim == 3 and len(poly.edge_directions):
        cross = np.cross(np.eye(3)[:, None, :], poly.edge_directions[None, :, :]).reshape(-1, 3)
        nrm = np.linalg.norm(cross, axis=1)
        axes.append(cross[nrm > 1e-9] / nrm[nrm > 1e-9, None])
    return np.vstack(axes)


def box_intersects(poly: Polytope, center, half_width) -> bool:
    """Exact test of ``poly`` against the closed axis-aligned box."""
    center = np.asarray(center, dtype=float)
    lo, hi = poly.bounds
    if np.any(lo > center + half_width) or np.any(hi < center - half_width):
        return False
    if poly.is_axis_aligned_box:
        return True
    axes = _sat_axes(poly, poly.dim)
    proj = poly.vertices @ axes.T
    c = axes @ center
    r = half_width * np.abs(axes).sum(axis=1)
    return not bool(np.any((proj.min(axis=0) > c + r + 1e-12) | (proj.max(axis=0) < c - r - 1e-12)))


def detect_active_obstacles(obstacles, nominal_position, sensing_radius) -> list[int]:
    """Indices of obstacles with a point inside the box ``|c - p|_inf <= r``."""
    if sensing_radius <= 0:
        raise ValueError("sensing radius must be positive")
    return [i for i, obs in enumerate(obstacles) if box_intersects(obs, nominal_position, sensing_radius)]


# -- closest points ---------------------------------------------------------------

@dataclass
class ClosestPointPair:
    point_on_obstacle: np.ndarray
    point_on_robot: np.ndarray
    squared_distance: float
    obstacle_index: object = None
    piece_index: int = 0

    @property
    def distance(self) -> float:
        return float(np.sqrt(self.squared_distance))


def closest_points_batch(pairs, tol=1e-10) -> list[ClosestPointPair]:
    """Closest points for each ``(obstacle, robot_piece_world)`` in ``pairs``.

    All distance QPs are stacked into one vectorized interior-point solve.
    """
    if not pairs:
        return []
    dim = pairs[0][0].dim
    m = max(o.num_facets + r.num_facets for o, r in pairs)
    B = len(pairs)
    n = 2 * dim
    G = np.zeros((B, m, n))
    h = np.ones((B, m))
    for i, (obs, rob) in enumerate(pairs):
        so, sr = obs.num_facets, rob.num_facets
        G[i, :so, :dim] = obs.a_matrix
        h[i, :so] = obs.b_vector
        G[i, so:so + sr, dim:] = rob.a_matrix
        h[i, so:so + sr] = rob.b_vector
    eye = np.eye(dim)
    P1 = 2.0 * np.block([[eye, -eye], [-eye, eye]])
    P = np.broadcast_to(P1, (B, n, n))
    q = np.zeros((B, n))
    x, status, _ = solve_batch(P, q, G, h, tol=tol)
    out = []
    for i in range(B):
        if status[i] is not QpStatus.OPTIMAL:
            # Rare ill-conditioned member: retry alone with the general solver.
            sol = solve(QpProblem(P1, q[i], G[i], -np.inf, h[i]), QpSettings(eps_abs=max(tol, 1e-9), eps_rel=max(tol, 1e-9)))
            if not sol.optimal:
                raise SolverFailure(f"closest-point QP failed with status {sol.status.value}", sol.status)
            x[i] = sol.primal
        co, cr = x[i, :dim], x[i, dim:]
        sq = float(np.sum((co - cr) ** 2))
        if sq < _CONTACT_CHECK_SQ:
            # Interior-point accuracy on the squared distance leaves about 1e-5
            # in the distance itself; decide contact exactly instead.
            obs, rob = pairs[i]
            if _axis_overlaps(obs, rob).min() >= -1e-12:
                c = _common_point(obs, rob)
                if c is not None:
                    co, cr, sq = c.copy(), c.copy(), 0.0
        out.append(ClosestPointPair(co, cr, sq))
    return out


def closest_points(obstacle: Polytope, robot_piece_world: Polytope) -> ClosestPointPair:
    return closest_points_batch([(obstacle, robot_piece_world)])[0]


def _axis_overlaps(a: Polytope, b: Polytope) -> np.ndarray:
    """Projected overlap of the two sets on every separating-axis candidate.

    Candidates are the facet normals of both sets and, in 3-D, cross products
    of their edge directions; the sets are disjoint iff some overlap is negative.
    """
    axes = [a.a_matrix, b.a_matrix]
    if a.dim == 3:
        ea, eb = a.edge_directions, b.edge_directions
        if len(ea) and len(eb):
            cross = np.cross(ea[:, None, :], eb[None, :, :]).reshape(-1, 3)
            nrm = np.linalg.norm(cross, axis=1)
            axes.append(cross[nrm > 1e-9] / nrm[nrm > 1e-9, None])
    axes = np.vstack(axes)
    pa, pb = a.vertices @ axes.T, b.vertices @ axes.T
    return np.minimum(pa.max(axis=0) - pb.min(axis=0), pb.max(axis=0) - pa.min(axis=0))


def penetration_depth(a: Polytope, b: Polytope) -> float:
    """Minimum translation separating two polytopes (0 when disjoint).

    Exact for polytopes: the minimum projected overlap over all separating-axis
    candidates.
    """
    return float(max(_axis_overlaps(a, b).min(), 0.0))


def _common_point(a: Polytope, b: Polytope):
    """A point in both sets, or None when they are disjoint."""
    A = np.vstack([a.a_matrix, b.a_matrix])
    rhs = np.concatenate([a.b_vector, b.b_vector])
    res = linprog(np.zeros(a.dim), A_ub=A, b_ub=rhs, bounds=[(None, None)] * a.dim, method="highs")
    return res.x if res.status == 0 else None


def signed_distance(a: Polytope, b: Polytope) -> float:
    """Euclidean distance when disjoint, minus the penetration depth otherwise."""
    d = closest_points(a, b).distance
    if d > 1e-7:
        return d
    return -penetration_depth(a, b)


# -- hyperplanes and point linearization -----------------------------------------

@dataclass
class Hyperplane:
    normal: np.ndarray
    anchor: np.ndarray
    margin: float = 0.0

    def value(self, point) -> float:
        """``n'(point - anchor) - margin``."""
        return float(self.normal @ (np.asarray(point, float) - self.anchor) - self.margin)


def supporting_hyperplane(pair: ClosestPointPair, margin=0.0) -> Hyperplane:
    """Separating plane through the obstacle-side point, normal toward the robot."""
    diff = pair.point_on_robot - pair.point_on_obstacle
    dist = np.linalg.norm(diff)
    if dist < DEGENERACY_THRESHOLD:
        raise DegenerateContact(f"closest points are {dist:.3e} apart")
    if margin < 0:
        raise ValueError("margin must be non-negative")
    return Hyperplane(diff / dist, pair.point_on_obstacle.copy(), float(margin))


@dataclass
class AffinePointMap:
    """First-order model of a body-fixed point as the pose varies.

    ``c(p, th) = c_bar + (p - p_bar) + J (th - th_bar)`` where the columns
    of ``J`` are ``dR/dth_r(th_bar) @ c_local``.
    """

    nominal_point: np.ndarray
    nominal_position: np.ndarray
    nominal_angles: np.ndarray
    angle_jacobian: np.ndarray
    local_point: np.ndarray = field(repr=False, default=None)

    def __call__(self, position, angles) -> np.ndarray:
        return (self.nominal_point + (np.asarray(position, float) - self.nominal_position)
                + self.angle_jacobian @ (np.atleast_1d(np.asarray(angles, float)) - self.nominal_angles))


def point_map(point, nominal_pose: Pose) -> AffinePointMap:
    """Linearize the world position of the body point currently at ``point``."""
    point = np.asarray(point, dtype=float)
    R = nominal_pose.rotation
    local = R.T @ (point - nominal_pose.position)
    J = np.column_stack([dR @ local for dR in rotation_derivatives(nominal_pose.orientation)])
    return AffinePointMap(point.copy(), nominal_pose.position.copy(), nominal_pose.orientation.copy(), J, local)


def linearize_robot_point(pair: ClosestPointPair, nominal_pose: Pose) -> AffinePointMap:
    return point_map(pair.point_on_robot, nominal_pose)
