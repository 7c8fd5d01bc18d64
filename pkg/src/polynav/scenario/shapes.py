"""Built-in robot shapes.  The body origin is the robot's reference point."""

from __future__ import annotations

import numpy as np

from ..geometry import Polytope, RobotShape

L_EXTENT = 0.17
L_THICKNESS = 0.08


def rectangle() -> RobotShape:
    """0.15 x 0.06 box; reference on the centerline 0.025 from the rear edge."""
    return RobotShape([Polytope.from_box([-0.025, -0.03], [0.125, 0.03])], name="rectangle")


def triangle() -> RobotShape:
    """Isosceles triangle, 0.13 long with a 0.075 rear edge; reference at the centroid."""
    rear = -0.13 / 3.0
    pts = [[rear, -0.0375], [rear, 0.0375], [rear + 0.13, 0.0]]
    return RobotShape([Polytope.from_vertices(pts)], name="triangle")


def _l_pieces():
    a, t = L_EXTENT, L_THICKNESS
    # Legs along +x and +y meeting at the inner corner (the origin).
    return [((-t, -t), (a - t, 0.0)), ((-t, 0.0), (0.0, a - t))]


def l_shape() -> RobotShape:
    """Two perpendicular legs; reference at the inner corner."""
    return RobotShape([Polytope.from_box(lo, hi) for lo, hi in _l_pieces()], name="l_shape")


def l_shape_3d(half_height=0.03) -> RobotShape:
    """Planar L extruded along body z; reference at the center of its bounding box.

    The centered reference makes the cross-section seen by a wall opening
    symmetric about the reference point, which matters for tight openings.
    """
    boxes = _l_pieces()
    c = (np.min([lo for lo, _ in boxes], axis=0) + np.max([hi for _, hi in boxes], axis=0)) / 2.0
    pieces = [Polytope.from_box([lo[0] - c[0], lo[1] - c[1], -half_height],
                                [hi[0] - c[0], hi[1] - c[1], half_height]) for lo, hi in boxes]
    return RobotShape(pieces, name="l_shape_3d")


SHAPES = {
    "rectangle": rectangle,
    "triangle": triangle,
    "l_shape": l_shape,
    "l_shape_3d": l_shape_3d,
}


def builtin_shape(name: str, scale: float = 1.0) -> RobotShape:
    try:
        shape = SHAPES[name]()
    except KeyError:
        raise KeyError(f"unknown shape {name!r}; choose from {sorted(SHAPES)}") from None
    return shape if scale == 1.0 else shape.scaled(scale)
