"""Regenerate the reconstructed 3-D five-wall maze scenario file.

Each wall is a slab normal to x spanning the whole domain cross-section, cut
into four boxes around a square opening. The opening side is the largest
bounding dimension of the L-shaped robot plus 20 percent.

    python tools/make_maze3d.py > src/polynav/scenarios/maze3d_lshape.yaml
"""

LOWER = (0.0, 0.0, 0.0)
UPPER = (3.2, 1.8, 1.2)
WALL_X = (0.6, 1.1, 1.6, 2.1, 2.6)
THICKNESS = 0.05
OPENING = 1.2 * 0.17
# Centers sit on planner cell centers (0.015 + 0.03 i) so that, with the
# planner inflation below, each opening leaves exactly one free cell column.
CENTERS = ((0.405, 0.285), (0.645, 0.435), (0.945, 0.645), (1.215, 0.795), (1.395, 0.945))
RESOLUTION = 0.03
INFLATION = 0.09


def wall_boxes(x, cy, cz):
    h = OPENING / 2
    x0, x1 = x - THICKNESS / 2, x + THICKNESS / 2
    y0, y1, z0, z1 = LOWER[1], UPPER[1], LOWER[2], UPPER[2]
    return [
        ((x0, y0, z0), (x1, cy - h, z1)),
        ((x0, cy + h, z0), (x1, y1, z1)),
        ((x0, cy - h, z0), (x1, cy + h, cz - h)),
        ((x0, cy - h, cz + h), (x1, cy + h, z1)),
    ]


def fmt(v):
    return "[" + ", ".join(f"{c:.4f}".rstrip("0").rstrip(".") if c else "0.0" for c in v) + "]"


def main():
    lines = [
        "name: maze3d-lshape",
        "description: >",
        "  Extruded L-shaped robot crossing five walls, each with one square opening.",
        "  Wall layout is a reconstruction generated by tools/make_maze3d.py; start",
        "  state and goal are the published values.",
        "dimension: 3",
        f"bounds: {{lower: {fmt(LOWER)}, upper: {fmt(UPPER)}}}",
        f"# walls at x = {', '.join(str(x) for x in WALL_X)}; opening side {OPENING:.3f} m;",
        f"# opening centers (y, z) = {', '.join(str(c) for c in CENTERS)}",
        "obstacles:",
    ]
    for x, (cy, cz) in zip(WALL_X, CENTERS):
        for lo, hi in wall_boxes(x, cy, cz):
            lines.append(f"  - box: {{lower: {fmt(lo)}, upper: {fmt(hi)}}}")
    lines += [
        "robots:",
        "  - name: lshape",
        "    shape: l_shape_3d",
        "    initial_state: [0.225, 0.338, 0.135, 0.0264, 0.769, 0.0]",
        "    goal: [2.99925, 1.4625, 0.99]",
        "    goal_radius: 0.05",
        "mpc:",
        "  horizon: 12",
        "  gamma: 0.1",
        "  ref_speed: 0.1",
        f"planner: {{resolution: {RESOLUTION}, inflation: {INFLATION}}}",
        "seed: 0",
        "max_steps: 600",
    ]
    print("\n".join(lines))


if __name__ == "__main__":
    main()
