"""Tests for barrier values, the decay recursion and constraint rows."""

import numpy as np
import pytest

from polynav.cbf import CbfParams, build_dcbf_rows, psi0, psi_affine, psi_sequence
from polynav.dynamics import Unicycle2D, Unicycle3D
from polynav.geometry import ClosestPointPair, Pose, linearize_robot_point, supporting_hyperplane


def _setup(margin=0.0, dist=0.3):
    model = Unicycle2D()
    pose = Pose([0.0, 0.0], [0.0])
    pair = ClosestPointPair(np.array([0.1 + dist, 0.0]), np.array([0.1, 0.0]), dist ** 2)
    return model, pose, pair, supporting_hyperplane(pair, margin), linearize_robot_point(pair, pose)


def test_psi0_at_nominal_is_distance():
    _, pose, pair, plane, pm = _setup()
    assert psi0(plane, pm, pose) == pytest.approx(np.sqrt(pair.squared_distance), abs=1e-7)


def test_margin_is_subtracted():
    _, pose, _, plane, pm = _setup(margin=0.05, dist=0.3)
    assert psi0(plane, pm, pose) == pytest.approx(0.25, abs=1e-12)


def test_moving_along_normal_increases_psi0():
    model, pose, _, plane, pm = _setup()
    x = np.array([0.0, 0.0, 0.0, 0.0])
    moved = x.copy()
    moved[:2] += 0.1 * plane.normal
    assert psi0(plane, pm, moved, model) - psi0(plane, pm, x, model) == pytest.approx(0.1, abs=1e-7)


def test_margin_monotonicity(rng):
    model, pose, pair, _, pm = _setup()
    x = rng.normal(size=4)
    base = psi0(supporting_hyperplane(pair, 0.0), pm, x, model)
    for eps in (0.01, 0.1):
        assert psi0(supporting_hyperplane(pair, eps), pm, x, model) == pytest.approx(base - eps, abs=1e-12)


@pytest.mark.parametrize("model", [Unicycle2D(), Unicycle3D()], ids=["2d", "3d"])
def test_affine_coefficients_reproduce_psi0(model, rng):
    dim = model.dim
    pose = Pose(rng.normal(size=dim), rng.uniform(-1, 1, len(model.angle_indices)))
    cr = pose.position + rng.normal(size=dim) * 0.1
    co = cr + rng.normal(size=dim)
    pair = ClosestPointPair(co, cr, float(np.sum((co - cr) ** 2)))
    plane, pm = supporting_hyperplane(pair, 0.02), linearize_robot_point(pair, pose)
    a, c = psi_affine(plane, pm, model)
    for _ in range(5):
        x = rng.normal(size=model.n_states)
        assert a @ x + c == pytest.approx(psi0(plane, pm, x, model), abs=1e-12)


def test_psi_sequence_examples():
    p = CbfParams(gammas=(0.1,))
    assert psi_sequence([2.0, 2.0, 2.0], p)[0] == pytest.approx([0.2, 0.2])
    assert psi_sequence([2.0, 1.8], p)[0][0] == pytest.approx(0.0, abs=1e-15)


def test_psi_sequence_second_order_matches_direct_recursion(rng):
    values = rng.normal(size=8)
    g1, g2 = 0.3, 0.6
    p = CbfParams(gammas=(g1, g2), m=2, m_cbf=1)
    psi1 = [values[t + 1] - values[t] + g1 * values[t] for t in range(7)]
    psi2 = [psi1[t + 1] - psi1[t] + g2 * psi1[t] for t in range(6)]
    got = psi_sequence(values, p)
    np.testing.assert_allclose(got[0], psi1, atol=1e-14)
    np.testing.assert_allclose(got[1], psi2, atol=1e-14)


def test_params_validation():
    with pytest.raises(ValueError):
        CbfParams(gammas=(0.0,))
    with pytest.raises(ValueError):
        CbfParams(gammas=(1.5,))
    with pytest.raises(ValueError):
        CbfParams(gammas=(0.1,), m=1, m_cbf=2)
    with pytest.raises(ValueError):
        CbfParams(omega_min=1.0, omega_max=0.0)


def _rows(k_max, psi_now):
    model, pose, pair, plane, pm = _setup()
    entries = [[("obs", plane, pm)] for _ in range(k_max)]
    return model, build_dcbf_rows(entries, psi_now, CbfParams(gammas=(0.1,)), model), plane, pm


def test_row_right_hand_sides():
    model, rows, plane, pm = _rows(3, 1.0)
    x = np.zeros(4)
    # with w = 1 the row reads psi0(x_k) >= 0.9^k
    for row, k in zip(rows, (1, 2, 3)):
        assert row.step == k
        assert row.slack_coeff == pytest.approx(-(0.9 ** k), abs=1e-15)
        assert row.evaluate(x, 1.0) == pytest.approx(psi0(plane, pm, x, model) - 0.9 ** k, abs=1e-12)
    assert -rows[2].slack_coeff == pytest.approx(0.729, abs=1e-15)


def test_zero_slack_is_pure_separation():
    model, rows, plane, pm = _rows(2, 1.0)
    x = np.array([0.05, 0.02, 0.1, 0.0])
    for row in rows:
        assert row.evaluate(x, 0.0) == pytest.approx(psi0(plane, pm, x, model), abs=1e-12)


def test_rows_are_affine(rng):
    model, rows, _, _ = _rows(2, 0.7)
    for row in rows:
        x, y = rng.normal(size=4), rng.normal(size=4)
        wx, wy = rng.random(), rng.random()
        t = 0.37
        lhs = row.evaluate(t * x + (1 - t) * y, t * wx + (1 - t) * wy)
        assert lhs == pytest.approx(t * row.evaluate(x, wx) + (1 - t) * row.evaluate(y, wy), abs=1e-12)
