"""Convex quadratic programs and the built-in solvers.

Problems take the form::

    minimize    1/2 x' P x + q' x
    subject to  l <= A x <= u

with ``P`` symmetric positive semidefinite and bounds that may be infinite.
Two methods are available: a primal-dual interior-point method (``"ipm"``,
the default) and an operator-splitting ADMM in the style of OSQP
(``"admm"``).  :func:`solve_batch` handles many small inequality-only
problems of identical shape in one vectorized interior-point run.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionMismatch

__all__ = [
    "QpProblem",
    "QpSettings",
    "QpSolution",
    "QpStatus",
    "solve",
    "solve_batch",
]


class QpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    MAX_ITERATIONS = "MaxIterations"
    NUMERICAL_ERROR = "NumericalError"


class QpProblem:
    """Container for a convex QP.

    Parameters
    ----------
    quadratic_cost : array_like or sparse, shape (n, n)
        ``P``; symmetrized on construction.
    linear_cost : array_like, shape (n,)
    constraint_matrix : array_like or sparse, shape (m, n), optional
    lower_bounds, upper_bounds : array_like, shape (m,), optional
        Missing bounds default to -inf / +inf.
    """

    def __init__(self, quadratic_cost, linear_cost, constraint_matrix=None,
                 lower_bounds=None, upper_bounds=None):
        q = np.asarray(linear_cost, dtype=float).ravel()
        n = q.size
        P = sp.csc_matrix(quadratic_cost, dtype=float)
        if P.shape != (n, n):
            raise DimensionMismatch(f"quadratic_cost has shape {P.shape}, expected {(n, n)}")
        P = ((P + P.T) * 0.5).tocsc()
        if constraint_matrix is None:
            A = sp.csc_matrix((0, n))
        else:
            A = sp.csc_matrix(constraint_matrix, dtype=float)
        m = A.shape[0]
        if A.shape[1] != n:
            raise DimensionMismatch(f"constraint_matrix has {A.shape[1]} columns, expected {n}")
        lo = np.full(m, -np.inf) if lower_bounds is None else np.asarray(lower_bounds, float).ravel()
        hi = np.full(m, np.inf) if upper_bounds is None else np.asarray(upper_bounds, float).ravel()
        if lo.size != m or hi.size != m:
            raise DimensionMismatch("bound vectors must have one entry per constraint row")
        if np.any(lo > hi):
            raise ValueError("lower_bounds must not exceed upper_bounds")
        self.quadratic_cost = P
        self.linear_cost = q
        self.constraint_matrix = A
        self.lower_bounds = lo
        self.upper_bounds = hi

    @property
    def num_vars(self) -> int:
        return self.linear_cost.size

    @property
    def num_cons(self) -> int:
        return self.constraint_matrix.shape[0]

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ (self.quadratic_cost @ x) + self.linear_cost @ x)

    def max_violation(self, x) -> float:
        """Largest bound violation of ``A x`` (0 when feasible)."""
        if self.num_cons == 0:
            return 0.0
        ax = self.constraint_matrix @ np.asarray(x, dtype=float)
        viol = np.maximum(self.lower_bounds - ax, ax - self.upper_bounds)
        return float(max(np.max(viol), 0.0))


@dataclass
class QpSettings:
    method: str = "ipm"
    eps_abs: float = 1e-6
    eps_rel: float = 1e-6
    max_iter: int = 4000
    # ADMM only
    rho: float = 0.1
    sigma: float = 1e-6
    alpha: float = 1.6
    adaptive_rho_interval: int = 25
    eps_prim_inf: float = 1e-5


@dataclass
class QpSolution:
    primal: np.ndarray
    objective: float
    status: QpStatus
    iterations: int
    solve_time: float
    dual: np.ndarray = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is QpStatus.OPTIMAL


def solve(problem: QpProblem, settings: QpSettings | None = None, warm_start=None) -> QpSolution:
    """Solve ``problem`` with the method named in ``settings``.

    ``warm_start`` is an optional primal guess.  The result is a pure
    function of the inputs, so repeated calls return identical vectors.
    """
    from . import _admm, _ipm

    settings = settings or QpSettings()
    if warm_start is not None:
        warm_start = np.asarray(warm_start, dtype=float).ravel()
        if warm_start.size != problem.num_vars:
            raise DimensionMismatch("warm start has the wrong length")
    t0 = time.perf_counter()
    if settings.method == "ipm":
        x, y, status, iters = _ipm.solve(problem, settings, warm_start)
    elif settings.method == "admm":
        x, y, status, iters = _admm.solve(problem, settings, warm_start)
    else:
        raise ValueError(f"unknown QP method {settings.method!r}")
    elapsed = time.perf_counter() - t0
    obj = problem.objective(x) if np.all(np.isfinite(x)) else np.nan
    return QpSolution(x, obj, status, iters, elapsed, y)


def solve_batch(P, q, G, h, tol=1e-10, max_iter=60):
    """Solve a stack of small inequality-constrained QPs in one run.

    Each problem is ``min 1/2 x'P_i x + q_i'x  s.t.  G_i x <= h_i``.
    Rows padded with zeros and a positive right-hand side are inert.

    Returns
    -------
    x : ndarray, shape (B, n)
    status : ndarray of QpStatus, shape (B,)
    iterations : int
    """
    from ._batch import solve_batch as _solve

    return _solve(P, q, G, h, tol=tol, max_iter=max_iter)
