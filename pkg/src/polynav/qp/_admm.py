"""Operator-splitting (ADMM) QP solver following the OSQP iteration.

Uses a single sparse LU of the quasi-definite KKT matrix, refactored only
when the adaptive step size ``rho`` changes by more than a factor of five.
Equality rows get a thousandfold ``rho``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import QpStatus

_RHO_MIN, _RHO_MAX = 1e-6, 1e6
_EQ_SCALE = 1e3


def _rho_vector(rho, lo, hi):
    vec = np.full(lo.size, rho)
    eq = np.isfinite(lo) & np.isfinite(hi) & (hi - lo <= 1e-12 * (1.0 + np.abs(hi)))
    free = ~np.isfinite(lo) & ~np.isfinite(hi)
    vec[eq] *= _EQ_SCALE
    vec[free] = _RHO_MIN
    return vec


def _factor(P, A, sigma, rho_vec):
    n = P.shape[0]
    K = sp.bmat([[P + sigma * sp.eye(n), A.T], [A, -sp.diags(1.0 / rho_vec)]], format="csc")
    return spla.splu(K)


def solve(problem, settings, warm_start=None):
    P, q = problem.quadratic_cost.tocsc(), problem.linear_cost
    A = problem.constraint_matrix.tocsc()
    lo, hi = problem.lower_bounds, problem.upper_bounds
    n, m = q.size, lo.size
    sigma, alpha = settings.sigma, settings.alpha
    rho = settings.rho

    x = np.zeros(n) if warm_start is None else warm_start.copy()
    z = np.clip(A @ x, lo, hi)
    y = np.zeros(m)
    rho_vec = _rho_vector(rho, lo, hi)
    try:
        lu = _factor(P, A, sigma, rho_vec)
    except RuntimeError:
        return x, y, QpStatus.NUMERICAL_ERROR, 0

    status = QpStatus.MAX_ITERATIONS
    it = 0
    for it in range(1, settings.max_iter + 1):
        x_prev, z_prev, y_prev = x, z, y
        rhs = np.concatenate([sigma * x_prev - q, z_prev - y_prev / rho_vec])
        sol = lu.solve(rhs)
        x_t = sol[:n]
        z_t = z_prev + (sol[n:] - y_prev) / rho_vec
        x = alpha * x_t + (1.0 - alpha) * x_prev
        z_relax = alpha * z_t + (1.0 - alpha) * z_prev
        z = np.clip(z_relax + y_prev / rho_vec, lo, hi)
        y = y_prev + rho_vec * (z_relax - z)

        if not np.all(np.isfinite(x)):
            status = QpStatus.NUMERICAL_ERROR
            break

        Ax, Px, ATy = A @ x, P @ x, A.T @ y
        r_prim = np.linalg.norm(Ax - z, np.inf) if m else 0.0
        r_dual = np.linalg.norm(Px + q + ATy, np.inf)
        eps_prim = settings.eps_abs + settings.eps_rel * max(
            np.linalg.norm(Ax, np.inf) if m else 0.0, np.linalg.norm(z, np.inf) if m else 0.0)
        eps_dual = settings.eps_abs + settings.eps_rel * max(
            np.linalg.norm(Px, np.inf), np.linalg.norm(ATy, np.inf), np.linalg.norm(q, np.inf))
        if r_prim <= eps_prim and r_dual <= eps_dual:
            status = QpStatus.OPTIMAL
            break

        dy = y - y_prev
        dy_norm = np.linalg.norm(dy, np.inf) if m else 0.0
        if dy_norm > 0:
            tol = settings.eps_prim_inf * dy_norm
            pos, neg = np.maximum(dy, 0.0), np.minimum(dy, 0.0)
            fin_hi, fin_lo = np.isfinite(hi), np.isfinite(lo)
            bounded = not (np.any(pos[~fin_hi] > tol) or np.any(neg[~fin_lo] < -tol))
            support = hi[fin_hi] @ pos[fin_hi] + lo[fin_lo] @ neg[fin_lo]
            if bounded and np.linalg.norm(A.T @ dy, np.inf) <= tol and support < -tol:
                status = QpStatus.PRIMAL_INFEASIBLE
                break

        if settings.adaptive_rho_interval and it % settings.adaptive_rho_interval == 0 and m:
            num = r_prim / max(np.linalg.norm(Ax, np.inf), np.linalg.norm(z, np.inf), 1e-30)
            den = r_dual / max(np.linalg.norm(Px, np.inf), np.linalg.norm(ATy, np.inf),
                               np.linalg.norm(q, np.inf), 1e-30)
            rho_new = float(np.clip(rho * np.sqrt(num / max(den, 1e-30)), _RHO_MIN, _RHO_MAX))
            if rho_new > 5.0 * rho or rho_new < 0.2 * rho:
                rho = rho_new
                rho_vec = _rho_vector(rho, lo, hi)
                try:
                    lu = _factor(P, A, sigma, rho_vec)
                except RuntimeError:
                    status = QpStatus.NUMERICAL_ERROR
                    break
    return x, y, status, it
