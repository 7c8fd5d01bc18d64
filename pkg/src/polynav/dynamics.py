"""Discrete-time unicycle models with analytic Jacobians.

A model exposes ``step``, ``jacobians`` and the index layout the controller
needs (which state entries are position, orientation and speed).  Anything
honoring that contract can be driven by :mod:`polynav.mpc`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_DT = 0.1


@dataclass
class LinearizedStep:
    """``x+ - xbar+ = A (x - xbar) + B (u - ubar) + d``."""

    a_matrix: np.ndarray
    b_matrix: np.ndarray
    residual: np.ndarray
    nominal_state: np.ndarray
    nominal_input: np.ndarray


class Unicycle2D:
    """State ``[x, y, heading, speed]``, input ``[turn rate, acceleration]``."""

    n_states = 4
    n_inputs = 2
    dim = 2
    position_indices = (0, 1)
    angle_indices = (2,)
    speed_index = 3

    def __init__(self, dt=DEFAULT_DT):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.dt = float(dt)

    def step(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        px, py, th, v = x
        dt = self.dt
        return np.array([px + v * np.cos(th) * dt,
                         py + v * np.sin(th) * dt,
                         th + u[0] * dt,
                         v + u[1] * dt])

    def jacobians(self, x, u):
        _, _, th, v = np.asarray(x, dtype=float)
        dt = self.dt
        A = np.eye(4)
        A[0, 2] = -v * np.sin(th) * dt
        A[0, 3] = np.cos(th) * dt
        A[1, 2] = v * np.cos(th) * dt
        A[1, 3] = np.sin(th) * dt
        B = np.zeros((4, 2))
        B[2, 0] = dt
        B[3, 1] = dt
        return A, B

    def heading_from_direction(self, direction):
        return np.array([np.arctan2(direction[1], direction[0])])


class Unicycle3D:
    """State ``[x, y, z, yaw, pitch, speed]``, input ``[yaw rate, pitch rate, acceleration]``."""

    n_states = 6
    n_inputs = 3
    dim = 3
    position_indices = (0, 1, 2)
    angle_indices = (3, 4)
    speed_index = 5

    def __init__(self, dt=DEFAULT_DT):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.dt = float(dt)

    def step(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        px, py, pz, yaw, pitch, v = x
        dt = self.dt
        cp = np.cos(pitch)
        return np.array([px + v * cp * np.cos(yaw) * dt,
                         py + v * cp * np.sin(yaw) * dt,
                         pz + v * np.sin(pitch) * dt,
                         yaw + u[0] * dt,
                         pitch + u[1] * dt,
                         v + u[2] * dt])

    def jacobians(self, x, u):
        _, _, _, yaw, pitch, v = np.asarray(x, dtype=float)
        dt = self.dt
        cy, sy = np.cos(yaw), np.sin(yaw)
        cp, sp = np.cos(pitch), np.sin(pitch)
        A = np.eye(6)
        A[0, 3] = -v * cp * sy * dt
        A[0, 4] = -v * sp * cy * dt
        A[0, 5] = cp * cy * dt
        A[1, 3] = v * cp * cy * dt
        A[1, 4] = -v * sp * sy * dt
        A[1, 5] = cp * sy * dt
        A[2, 4] = v * cp * dt
        A[2, 5] = sp * dt
        B = np.zeros((6, 3))
        B[3, 0] = B[4, 1] = B[5, 2] = dt
        return A, B

    def heading_from_direction(self, direction):
        d = np.asarray(direction, dtype=float)
        return np.array([np.arctan2(d[1], d[0]), np.arctan2(d[2], np.hypot(d[0], d[1]))])


def make_model(dim, dt=DEFAULT_DT):
    if dim == 2:
        return Unicycle2D(dt)
    if dim == 3:
        return Unicycle3D(dt)
    raise ValueError(f"no unicycle model for dimension {dim}")


def _with_dt(model, dt):
    if dt is None or dt == model.dt:
        return model
    return type(model)(dt)


def step(model, x, u, dt=None):
    return _with_dt(model, dt).step(x, u)


def linearize(model, x_bar, u_bar, x_bar_next, dt=None) -> LinearizedStep:
    """Jacobians at ``(x_bar, u_bar)`` and the residual ``f(x_bar, u_bar) - x_bar_next``."""
    model = _with_dt(model, dt)
    x_bar = np.asarray(x_bar, dtype=float)
    u_bar = np.asarray(u_bar, dtype=float)
    A, B = model.jacobians(x_bar, u_bar)
    d = model.step(x_bar, u_bar) - np.asarray(x_bar_next, dtype=float)
    return LinearizedStep(A, B, d, x_bar, u_bar)


def rollout(model, x0, inputs):
    """States ``x_0..x_N`` produced by applying ``inputs`` from ``x0``."""
    states = [np.asarray(x0, dtype=float)]
    for u in inputs:
        states.append(model.step(states[-1], u))
    return np.array(states)
