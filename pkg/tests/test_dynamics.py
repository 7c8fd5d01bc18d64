"""Tests for the unicycle models and their linearization."""

import numpy as np
import pytest

from polynav.dynamics import Unicycle2D, Unicycle3D, linearize, make_model, rollout, step

MODELS = [Unicycle2D(), Unicycle3D()]


def central_differences(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((f(x + e) - f(x - e)) / (2 * h))
    return np.column_stack(cols)


def random_point(model, rng):
    x = rng.uniform(-2, 2, model.n_states)
    u = rng.uniform(-0.5, 0.5, model.n_inputs)
    return x, u


def test_2d_straight_line():
    np.testing.assert_allclose(step(Unicycle2D(), [0, 0, 0, 1], [0, 0], 0.1), [0.1, 0, 0, 1], atol=1e-15)


def test_2d_direct_substitution():
    got = step(Unicycle2D(), [0, 0, np.pi / 2, 2], [0.5, 0.5], 0.1)
    np.testing.assert_allclose(got, [0, 0.2, np.pi / 2 + 0.05, 2.05], atol=1e-15)


def test_3d_vertical_motion():
    got = step(Unicycle3D(), [0, 0, 0, 0, np.pi / 2, 1], [0, 0, 0], 0.1)
    np.testing.assert_allclose(got, [0, 0, 0.1, 0, np.pi / 2, 1], atol=1e-15)


def test_2d_jacobian_example():
    lin = linearize(Unicycle2D(), [0, 0, 0, 1], [0, 0], [0.1, 0, 0, 1], 0.1)
    expected_A = np.eye(4)
    expected_A[0, 3] = 0.1
    expected_A[1, 2] = 0.1
    np.testing.assert_allclose(lin.a_matrix, expected_A, atol=1e-15)
    np.testing.assert_allclose(lin.b_matrix, [[0, 0], [0, 0], [0.1, 0], [0, 0.1]], atol=1e-15)


@pytest.mark.parametrize("model", MODELS, ids=["2d", "3d"])
def test_consistent_nominal_has_zero_residual(model, rng):
    x, u = random_point(model, rng)
    lin = linearize(model, x, u, model.step(x, u))
    assert np.array_equal(lin.residual, np.zeros(model.n_states))


@pytest.mark.parametrize("model", MODELS, ids=["2d", "3d"])
def test_jacobians_match_central_differences(model):
    rng = np.random.default_rng(0)
    for _ in range(100):
        x, u = random_point(model, rng)
        A, B = model.jacobians(x, u)
        A_fd = central_differences(lambda z: model.step(z, u), x)
        B_fd = central_differences(lambda z: model.step(x, z), u)
        assert np.linalg.norm(A - A_fd) / max(np.linalg.norm(A), 1.0) < 1e-6
        assert np.linalg.norm(B - B_fd) / max(np.linalg.norm(B), 1.0) < 1e-6


@pytest.mark.parametrize("model", MODELS, ids=["2d", "3d"])
def test_linearization_error_is_second_order(model):
    rng = np.random.default_rng(1)
    for _ in range(50):
        x, u = random_point(model, rng)
        A, B = model.jacobians(x, u)
        dx = rng.normal(size=model.n_states)
        du = rng.normal(size=model.n_inputs)
        scale = 1e-2 / max(np.linalg.norm(dx), np.linalg.norm(du))
        dx, du = dx * scale, du * scale
        err = np.linalg.norm(model.step(x + dx, u + du) - (model.step(x, u) + A @ dx + B @ du))
        assert err <= 1e-4


def test_make_model_and_rollout():
    m = make_model(2, 0.2)
    assert isinstance(m, Unicycle2D) and m.dt == 0.2
    X = rollout(m, [0, 0, 0, 1], np.zeros((3, 2)))
    np.testing.assert_allclose(X[:, 0], [0, 0.2, 0.4, 0.6])
    with pytest.raises(ValueError):
        make_model(4)
    with pytest.raises(ValueError):
        Unicycle2D(dt=0.0)


def test_heading_from_direction():
    np.testing.assert_allclose(Unicycle2D().heading_from_direction([0, 2]), [np.pi / 2])
    np.testing.assert_allclose(Unicycle3D().heading_from_direction([1, 1, np.sqrt(2)]), [np.pi / 4, np.pi / 4])
