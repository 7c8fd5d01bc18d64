"""Tests for scenario files, closed-loop runs, export, plots and the command line."""

import json
import textwrap
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from polynav.cli import main
from polynav.dynamics import make_model
from polynav.errors import IoError, ParseError, ValidationError
from polynav.mpc import min_distance
from polynav.scenario import (
    GOAL_REACHED,
    INFEASIBLE,
    TIMEOUT,
    builtin_scenarios,
    builtin_shape,
    export,
    load_scenario,
    parse_scenario,
    read_trajectory,
    run,
    sample_starts,
)
from polynav.scenario.export import PLOT_FILE, SUMMARY_FILE, TRAJECTORY_FILE

BASE = textwrap.dedent("""\
    name: tiny
    dimension: 2
    bounds: {lower: [0, 0], upper: [1, 1]}
    obstacles:
      - box: {lower: [0.5, 0.0], upper: [0.55, 0.4]}
    robots:
      - name: r
        shape: rectangle
        initial_state: [0.2, 0.7, 0.0, 0.0]
        goal: [0.8, 0.7]
    """)


# -- loading -------------------------------------------------------------------------

def test_builtin_scenarios_load():
    names = builtin_scenarios()
    assert {"maze2d_rectangle", "maze2d_triangle", "maze2d_lshape", "maze2d_team", "maze3d_lshape",
            "corridor", "sealed"} <= set(names)
    for name in names:
        load_scenario(name)


def test_rectangle_maze_start_and_goal():
    cfg = load_scenario("maze2d_rectangle")
    np.testing.assert_array_equal(cfg.robots[0].initial_state, [0.15, 0.225, 0.0, 0.0])
    np.testing.assert_array_equal(cfg.robots[0].goal, [1.275, 0.975])
    assert cfg.mpc.horizon == 12
    assert cfg.mpc.cbf.gammas[0] == 0.1


def test_3d_maze_start_and_goal():
    cfg = load_scenario("maze3d_lshape")
    np.testing.assert_array_equal(cfg.robots[0].initial_state, [0.225, 0.338, 0.135, 0.0264, 0.769, 0.0])
    np.testing.assert_array_equal(cfg.robots[0].goal, [2.99925, 1.4625, 0.99])
    assert len(cfg.obstacles) == 20  # five walls of four boxes


def test_team_scenario_uses_two_thirds_scale():
    cfg = load_scenario("maze2d_team")
    assert [r.shape_name for r in cfg.robots] == ["l_shape", "triangle", "rectangle"]
    full = builtin_shape("rectangle")
    small = cfg.robots[2].shape
    np.testing.assert_allclose(small.pieces[0].vertices, full.pieces[0].vertices * (2.0 / 3.0), atol=1e-12)


def test_builtin_shape_dimensions():
    rect = builtin_shape("rectangle").pieces[0].vertices
    np.testing.assert_allclose(rect.max(0) - rect.min(0), [0.15, 0.06])
    assert rect[:, 0].min() == pytest.approx(-0.025)
    tri = builtin_shape("triangle").pieces[0].vertices
    np.testing.assert_allclose(tri.max(0) - tri.min(0), [0.13, 0.075])
    np.testing.assert_allclose(tri.mean(0), 0.0, atol=1e-12)
    ell = np.vstack([p.vertices for p in builtin_shape("l_shape").pieces])
    np.testing.assert_allclose(ell.max(0) - ell.min(0), [0.17, 0.17])
    ell3 = np.vstack([p.vertices for p in builtin_shape("l_shape_3d").pieces])
    np.testing.assert_allclose(ell3.max(0) - ell3.min(0), [0.17, 0.17, 0.06])


def test_parse_error_reports_line():
    text = BASE.replace("initial_state: [0.2, 0.7, 0.0, 0.0]", "initial_state: [0.2, 0.7]")
    with pytest.raises(ParseError, match=r"line 9: field 'robots\.0\.initial_state'"):
        parse_scenario(text)


def test_malformed_yaml_reports_line():
    with pytest.raises(ParseError, match="line 3"):
        parse_scenario("name: x\ndimension: 2\nbounds: {lower: [0, 0]]\n")


def test_unknown_mpc_key():
    with pytest.raises(ParseError, match="mpc"):
        parse_scenario(BASE + "mpc: {horizn: 3}\n")


def test_overlapping_start_is_rejected():
    text = BASE.replace("[0.2, 0.7, 0.0, 0.0]", "[0.45, 0.2, 0.0, 0.0]")
    with pytest.raises(ValidationError):
        parse_scenario(text)


def test_missing_scenario():
    with pytest.raises(FileNotFoundError):
        load_scenario("no_such_scenario")


# -- runs ------------------------------------------------------------------------------

def test_corridor_reaches_goal():
    cfg = load_scenario("corridor")
    rec = run(cfg)
    assert rec.outcome == GOAL_REACHED
    assert rec.tracks[0].reached
    assert rec.steps == 26  # regression value
    assert np.linalg.norm(rec.tracks[0].states[-1][:2] - cfg.robots[0].goal) <= 0.05


def test_sealed_room_ends_without_collision():
    cfg = load_scenario("sealed")
    rec = run(cfg)
    assert rec.outcome in (TIMEOUT, INFEASIBLE)
    model = make_model(2, cfg.mpc.dt)
    for x in rec.tracks[0].states:
        assert min_distance(cfg.robots[0].shape, x, cfg.obstacles, model) >= -1e-6


def test_run_is_deterministic():
    cfg = load_scenario("maze2d_rectangle")
    a, b = run(cfg, max_steps=15), run(cfg, max_steps=15)
    for ta, tb in zip(a.tracks, b.tracks):
        np.testing.assert_array_equal(np.array(ta.states), np.array(tb.states))
        np.testing.assert_array_equal(np.array(ta.inputs), np.array(tb.inputs))
        assert [d.iterations for d in ta.diagnostics] == [d.iterations for d in tb.diagnostics]


def test_replay_reproduces_states():
    cfg = load_scenario("maze2d_triangle")
    rec = run(cfg, max_steps=30)
    model = make_model(2, cfg.mpc.dt)
    tr = rec.tracks[0]
    for t, u in enumerate(tr.inputs):
        assert np.max(np.abs(model.step(tr.states[t], u) - tr.states[t + 1])) <= 1e-9


def test_random_starts_are_reproducible_and_free():
    cfg = load_scenario("maze2d_rectangle")
    a = sample_starts(cfg, 0, 5, np.random.default_rng(3))
    b = sample_starts(cfg, 0, 5, np.random.default_rng(3))
    np.testing.assert_array_equal(np.array(a), np.array(b))
    model = make_model(2, cfg.mpc.dt)
    for x in a:
        assert min_distance(cfg.robots[0].shape, x, cfg.obstacles, model) > 0


# -- export ----------------------------------------------------------------------------

def test_trajectory_round_trip(tmp_path):
    cfg = load_scenario("corridor")
    rec = run(cfg, max_steps=2)
    paths = export(rec, tmp_path)
    rows = read_trajectory(paths["trajectory"])
    assert len(rows) == 2
    tr = rec.tracks[0]
    for t, row in enumerate(rows):
        assert row["t"] == t and row["robot"] == "rectangle"
        np.testing.assert_array_equal([row[f"x{i}"] for i in range(4)], tr.states[t])
        np.testing.assert_array_equal([row[f"u{i}"] for i in range(2)], tr.inputs[t])
        assert row["min_distance"] == tr.diagnostics[t].min_distance
        assert row["iterations"] == tr.diagnostics[t].iterations
    data = json.loads((tmp_path / SUMMARY_FILE).read_text())
    assert data["steps"] == 2 and data["outcome"] == TIMEOUT
    assert data["robots"][0]["min_distance"] is None  # no obstacles at all


def test_empty_record_gives_header_only(tmp_path):
    rec = run(load_scenario("corridor"), max_steps=0)
    export(rec, tmp_path)
    lines = (tmp_path / TRAJECTORY_FILE).read_text().splitlines()
    assert len(lines) == 1 and lines[0].startswith("robot,t,x0")


def test_export_to_unwritable_location(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    rec = run(load_scenario("corridor"), max_steps=0)
    with pytest.raises(IoError):
        export(rec, blocker / "sub")


def _gids(svg_path):
    ids = [el.get("id") for el in ET.parse(svg_path).iter() if el.get("id")]
    return lambda prefix: sum(1 for i in ids if i.startswith(prefix))


def test_maze_plot_contains_all_elements(tmp_path):
    cfg = load_scenario("maze2d_rectangle")
    rec = run(cfg, max_steps=3)
    export(rec, tmp_path, cfg=cfg, plot=True)
    count = _gids(tmp_path / PLOT_FILE)
    assert count("obstacle-") == len(cfg.obstacles)
    assert count("start-0") == 1
    assert count("goal-0") == 1
    assert count("trajectory-0") == 1
    assert count("reference-0") == 1


def test_3d_plot_has_two_views(tmp_path):
    cfg = load_scenario("maze3d_lshape")
    rec = run(cfg, max_steps=1)
    export(rec, tmp_path, cfg=cfg, plot=True)
    count = _gids(tmp_path / PLOT_FILE)
    assert count("obstacle-") == 2 * len(cfg.obstacles)
    assert count("trajectory-0") == 2


# -- command line ----------------------------------------------------------------------

def test_cli_run_goal_reached(tmp_path, capsys):
    assert main(["run", "corridor", "--out", str(tmp_path), "--plot"]) == 0
    assert "GoalReached" in capsys.readouterr().out
    assert (tmp_path / TRAJECTORY_FILE).exists() and (tmp_path / PLOT_FILE).exists()


def test_cli_run_timeout_is_nonzero():
    assert main(["run", "corridor", "--max-steps", "3"]) == 1


def test_cli_errors(tmp_path):
    assert main(["validate", "no_such_scenario"]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("dimension: 5\n")
    assert main(["run", str(bad)]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "corridor", "--max-steps", "1", "--out", str(blocker / "sub")]) == 3


def test_cli_validate_and_list(capsys):
    assert main(["validate", "maze2d_team"]) == 0
    assert main(["list"]) == 0
    assert "maze3d_lshape" in capsys.readouterr().out


def test_cli_bench(tmp_path):
    code = main(["bench", "corridor", "--trials", "2", "--horizons", "6", "--gammas", "0.1", "--steps", "2",
                 "--out", str(tmp_path)])
    assert code == 0
    table = json.loads((tmp_path / "benchmark.json").read_text())
    assert len(table) == 1 and table[0]["samples"] > 0
    assert (tmp_path / "benchmark.svg").exists()
