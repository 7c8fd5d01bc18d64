"""Discrete-time barrier functions built on supporting hyperplanes.

For a hyperplane ``(n, c_O)`` and a linearized robot point ``c(x)``, the
zeroth-order barrier is ``psi0(x) = n'(c(x) - c_O) - eps``.  The enforced
first-order condition, relaxed by a slack ``w``, reads

    psi0(x_k) >= w_k * (1 - gamma)^k * psi0(x_0)

which is affine in ``(x_k, w_k)`` because ``psi0(x_0)`` is measured.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import AffinePointMap, Hyperplane, Pose


@dataclass
class CbfParams:
    gammas: tuple = (0.1,)
    m: int = 1
    m_cbf: int = 1
    epsilon: float = 0.0
    omega_min: float = 0.0
    omega_max: float = 1.0
    omega_ref: float = 1.0

    def __post_init__(self):
        self.gammas = tuple(float(g) for g in np.atleast_1d(self.gammas))
        if len(self.gammas) < self.m:
            raise ValueError("need one decay rate per order up to the relative degree")
        if any(not (0.0 < g <= 1.0) for g in self.gammas):
            raise ValueError("decay rates must lie in (0, 1]")
        if not (1 <= self.m_cbf <= self.m):
            raise ValueError("enforced order must satisfy 1 <= m_cbf <= m")
        if self.omega_min > self.omega_max:
            raise ValueError("omega_min exceeds omega_max")
        if self.epsilon < 0:
            raise ValueError("safety margin must be non-negative")

    @property
    def gamma(self) -> float:
        return self.gammas[0]


@dataclass
class DcbfRow:
    """``state_coeffs @ x_k + slack_coeff * w >= lower``."""

    step: int
    state_coeffs: np.ndarray
    slack_coeff: float
    lower: float
    key: tuple = field(default=())

    def evaluate(self, state, omega) -> float:
        """Signed slack of the row; non-negative when satisfied."""
        return float(self.state_coeffs @ np.asarray(state, float) + self.slack_coeff * omega - self.lower)


def _pose(state, model):
    if isinstance(state, Pose):
        return state
    state = np.asarray(state, dtype=float)
    return Pose(state[list(model.position_indices)], state[list(model.angle_indices)])


def psi0(hyperplane: Hyperplane, point_map: AffinePointMap, state, model=None) -> float:
    """Zeroth-order barrier value at ``state`` (a Pose, or a state vector with ``model``)."""
    pose = _pose(state, model)
    return hyperplane.value(point_map(pose.position, pose.orientation))


def psi_affine(hyperplane: Hyperplane, point_map: AffinePointMap, model):
    """Coefficients ``(a, c)`` with ``psi0(x) = a @ x + c`` over the full state."""
    n = hyperplane.normal
    a = np.zeros(model.n_states)
    a[list(model.position_indices)] = n
    ang = n @ point_map.angle_jacobian
    a[list(model.angle_indices)] = ang
    const = (n @ (point_map.nominal_point - point_map.nominal_position - hyperplane.anchor)
             - ang @ point_map.nominal_angles - hyperplane.margin)
    return a, float(const)


def psi_sequence(values, params: CbfParams) -> list[list[float]]:
    """Evaluate ``psi_i = (psi_{i-1}(t+1) - psi_{i-1}(t)) + gamma_i psi_{i-1}(t)`` for i = 1..m.

    Each order is one sample shorter than the previous one.
    """
    values = [float(v) for v in values]
    if len(values) < params.m + 1:
        raise ValueError("sequence too short for the relative degree")
    out = []
    prev = values
    for i in range(params.m):
        g = params.gammas[i]
        cur = [prev[t + 1] - prev[t] + g * prev[t] for t in range(len(prev) - 1)]
        out.append(cur)
        prev = cur
    return out


def build_dcbf_rows(hyperplanes_per_step, psi0_at_current, params: CbfParams, model) -> list[DcbfRow]:
    """One affine row per ``(key, hyperplane, point_map)`` entry at each step.

    Parameters
    ----------
    hyperplanes_per_step : list of lists
        Entry ``k - 1`` lists ``(key, Hyperplane, AffinePointMap)`` for step k.
    psi0_at_current : float or mapping
        Barrier value at the measured state, per key or shared.
    """
    if params.m_cbf != 1:
        raise NotImplementedError("only first-order relaxed constraints are supported")
    decay = 1.0 - params.gamma
    rows = []
    for k, entries in enumerate(hyperplanes_per_step, start=1):
        for key, plane, pmap in entries:
            cur = psi0_at_current[key] if isinstance(psi0_at_current, dict) else psi0_at_current
            a, const = psi_affine(plane, pmap, model)
            rows.append(DcbfRow(k, a, -(decay ** k) * max(float(cur), 0.0), -const, key))
    return rows
