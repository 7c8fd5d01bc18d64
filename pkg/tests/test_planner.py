"""Tests for the occupancy grid, A* and local reference sampling."""

import heapq

import numpy as np
import pytest

from polynav.dynamics import Unicycle2D, Unicycle3D
from polynav.errors import NoPath
from polynav.geometry import Polytope
from polynav.planner import GridMap, ReferencePath, astar, local_reference, plan_path, unwrap_to


def dijkstra_counts(occ, start, goal):
    """Independent 8-connected Dijkstra that forbids cutting blocked corners.

    Returns the (straight, diagonal) move counts of an optimal path, which
    determine its cost a + b * sqrt(2) exactly.
    """
    H, W = occ.shape
    dist = {start: (0.0, 0, 0)}
    heap = [(0.0, 0, 0, start)]
    done = set()
    while heap:
        d, a, b, cur = heapq.heappop(heap)
        if cur in done:
            continue
        done.add(cur)
        if cur == goal:
            return a, b
        r, c = cur
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == dc == 0:
                    continue
                nr, nc = r + dr, c + dc
                if not (0 <= nr < H and 0 <= nc < W) or occ[nr, nc]:
                    continue
                diag = dr != 0 and dc != 0
                if diag and (occ[r + dr, c] or occ[r, c + dc]):
                    continue
                na, nb = (a, b + 1) if diag else (a + 1, b)
                nd = na + nb * np.sqrt(2.0)
                if nd < dist.get((nr, nc), (np.inf,))[0] - 1e-12:
                    dist[(nr, nc)] = (nd, na, nb)
                    heapq.heappush(heap, (nd, na, nb, (nr, nc)))
    return None


def test_straight_and_diagonal_costs():
    grid = GridMap.empty((10, 10))
    assert astar(grid, (0, 0), (0, 9)).cost == pytest.approx(9.0)
    assert astar(grid, (0, 0), (9, 9)).cost == pytest.approx(9 * np.sqrt(2))


def test_consecutive_cells_are_neighbors():
    grid = GridMap.empty((12, 12))
    grid.occupied[3:9, 6] = True
    path = astar(grid, (5, 0), (5, 11))
    steps = np.abs(np.diff(np.array(path.cells), axis=0))
    assert np.all(steps.max(axis=1) == 1)


def test_astar_matches_dijkstra_on_random_grids():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 100:
        occ = rng.random((40, 40)) < 0.2
        free = np.argwhere(~occ)
        s, g = (tuple(int(v) for v in free[i]) for i in rng.choice(len(free), 2, replace=False))
        oracle = dijkstra_counts(occ, s, g)
        grid = GridMap(occ, [0, 0], 1.0)
        if oracle is None:
            with pytest.raises(NoPath):
                astar(grid, s, g)
            continue
        path = astar(grid, s, g)
        assert path.move_counts[:2] == oracle
        assert path.cost == oracle[0] + oracle[1] * np.sqrt(2.0)
        checked += 1


def test_no_path_through_wall():
    grid = GridMap.empty((10, 10))
    grid.occupied[:, 5] = True
    with pytest.raises(NoPath):
        astar(grid, (0, 0), (0, 9))


def test_inflated_grid_marks_nearby_cells():
    obs = [Polytope.from_box([0.4, 0.4], [0.6, 0.6]), Polytope.from_vertices([[0.0, 0.9], [0.2, 0.9], [0.1, 1.0]])]
    grid = GridMap.from_obstacles(obs, [0, 0], [1, 1], 0.02, inflation=0.1)
    for idx in np.ndindex(grid.shape):
        c = grid.cell_center(idx)
        gap = np.maximum(np.maximum([0.4, 0.4] - c, c - [0.6, 0.6]), 0)
        if np.linalg.norm(gap) <= 0.1 - 1e-9:
            assert grid.occupied[idx]
        if np.linalg.norm(gap) > 0.1 + 1e-9 and c[1] < 0.7:
            assert not grid.occupied[idx]


def test_3d_grid_path():
    wall = Polytope.from_box([0.45, 0.0, 0.0], [0.55, 1.0, 0.6])
    grid = GridMap.from_obstacles([wall], [0, 0, 0], [1, 1, 1], 0.05, inflation=0.05)
    path = plan_path(grid, [0.1, 0.5, 0.1], [0.9, 0.5, 0.1])
    assert np.all(path.waypoints[:, 2].max() > 0.6)
    assert path.waypoints[0] == pytest.approx([0.1, 0.5, 0.1])
    assert path.waypoints[-1] == pytest.approx([0.9, 0.5, 0.1])


def test_local_reference_on_straight_path():
    path = ReferencePath(np.array([[0.0, 0.0], [1.0, 0.0]]))
    refs, s0 = local_reference(path, [0, 0, 0, 0], 0.2, 12, 0.1, Unicycle2D())
    assert refs.shape == (13, 4)
    np.testing.assert_allclose(np.diff(refs[:, 0]), 0.02, atol=1e-12)
    np.testing.assert_allclose(refs[:, 2], 0.0)
    np.testing.assert_allclose(refs[:, 3], 0.2)
    assert s0 == 0.0


def test_local_reference_clamps_at_end():
    path = ReferencePath(np.array([[0.0, 0.0], [1.0, 0.0]]))
    refs, _ = local_reference(path, [1.0, 0, 0, 0], 0.2, 12, 0.1, Unicycle2D())
    np.testing.assert_allclose(refs[:, :2], np.tile([1.0, 0.0], (13, 1)))
    np.testing.assert_allclose(refs[:, 3], 0.0)


def test_local_reference_unwraps_headings_at_corner():
    # path going west, then turning south: raw headings jump from pi to -pi/2
    path = ReferencePath(np.array([[1.0, 0.0], [0.0, 0.0], [0.0, -1.0]]))
    state = [0.12, 0.0, np.pi, 0.2]
    refs, _ = local_reference(path, state, 0.2, 12, 0.1, Unicycle2D())
    heading = refs[:, 2]
    assert np.all(np.abs(np.diff(heading)) < np.pi / 2)
    assert heading[0] == pytest.approx(np.pi)
    assert heading[-1] == pytest.approx(3 * np.pi / 2)


def test_local_reference_spacing_bound():
    rng = np.random.default_rng(5)
    pts = np.cumsum(rng.normal(size=(30, 2)) * 0.05, axis=0)
    path = ReferencePath(pts)
    refs, s0 = local_reference(path, np.r_[pts[3], 0.0, 0.0], 0.2, 12, 0.1, Unicycle2D())
    arc = np.array([path.project(p) for p in refs[:, :2]])
    assert np.all(np.diff(arc) <= 0.02 + 1e-9)


def test_local_reference_3d_headings():
    path = ReferencePath(np.array([[0, 0, 0], [1.0, 1.0, np.sqrt(2.0)]]))
    refs, _ = local_reference(path, np.zeros(6), 0.2, 8, 0.1, Unicycle3D())
    np.testing.assert_allclose(refs[:, 3], np.pi / 4, atol=1e-12)
    np.testing.assert_allclose(refs[:, 4], np.pi / 4, atol=1e-12)


def test_unwrap_to():
    assert unwrap_to(-np.pi / 2, np.pi) == pytest.approx(3 * np.pi / 2)
    assert unwrap_to(0.1, 4 * np.pi) == pytest.approx(4 * np.pi + 0.1)
