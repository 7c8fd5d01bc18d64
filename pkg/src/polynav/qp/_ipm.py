"""Mehrotra predictor-corrector interior-point method for convex QPs.

Two-sided rows ``l <= A x <= u`` are split into equalities ``E x = e`` and
one-sided inequalities ``G x <= h``; infinite bounds are dropped.  Each
Newton step solves the reduced KKT system

    [ P + G' W G + d I    E' ] [dx]   [r1]
    [ E                 -d I ] [dy] = [r2]

with ``W = Z S^-1`` and a small static regularization ``d`` cleaned up by
iterative refinement.  Small systems are factored densely, larger ones
with a sparse LU.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import QpStatus

_REG = 1e-10
_DENSE_LIMIT = 450
_STEP_FRACTION = 0.99
_MAX_IPM_ITER = 120


def _split_rows(problem):
    A = problem.constraint_matrix.tocsr()
    lo, hi = problem.lower_bounds, problem.upper_bounds
    fin_lo, fin_hi = np.isfinite(lo), np.isfinite(hi)
    eq = fin_lo & fin_hi & (hi - lo <= 1e-12 * (1.0 + np.abs(hi)))
    up = fin_hi & ~eq
    dn = fin_lo & ~eq
    E = A[eq]
    e = 0.5 * (lo[eq] + hi[eq])
    G = sp.vstack([A[up], -A[dn]]).tocsr()
    h = np.concatenate([hi[up], -lo[dn]])
    return E, e, G, h, (eq, up, dn)


class _KktSolver:
    """Factor-once, solve-many wrapper around the reduced KKT matrix.

    Dense inputs (ndarrays) are assembled and factored with LAPACK; sparse
    inputs use a sparse LU.
    """

    def __init__(self, P, G, E, w):
        n, p = P.shape[0], E.shape[0]
        self.n = n
        self.dense = isinstance(P, np.ndarray)
        if self.dense:
            K0 = np.zeros((n + p, n + p))
            K0[:n, :n] = P + (G.T * w) @ G
            K0[:n, n:] = E.T
            K0[n:, :n] = E
            self.K0 = K0
            K = K0.copy()
            idx = np.arange(n + p)
            K[idx, idx] += np.concatenate([np.full(n, _REG), np.full(p, -_REG)])
            self.lu = sla.lu_factor(K, check_finite=False)
            return
        H = P + G.T @ sp.diags(w) @ G
        K0 = sp.bmat([[H, E.T], [E, None]], format="csc") if p else sp.csc_matrix(H)
        reg = sp.diags(np.concatenate([np.full(n, _REG), np.full(p, -_REG)]))
        self.K0 = K0
        self.lu = spla.splu((K0 + reg).tocsc())

    def _raw(self, rhs):
        if self.dense:
            return sla.lu_solve(self.lu, rhs, check_finite=False)
        return self.lu.solve(rhs)

    def solve(self, rhs, refine=2):
        sol = self._raw(rhs)
        for _ in range(refine):
            sol = sol + self._raw(rhs - self.K0 @ sol)
        return sol


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    with np.errstate(over="ignore"):
        return float(min(1.0, np.min(-v[neg] / dv[neg])))


def solve(problem, settings, warm_start=None):
    """Return ``(x, y, status, iterations)`` with ``y`` the row multipliers."""
    P = problem.quadratic_cost.tocsc()
    q = problem.linear_cost
    n = q.size
    E, e, G, h, masks = _split_rows(problem)
    p, m = E.shape[0], G.shape[0]
    if n + p <= _DENSE_LIMIT:
        P, G, E = P.toarray(), G.toarray(), E.toarray()
        GT, ET = G.T, E.T
    else:
        GT, ET = G.T.tocsr(), E.T.tocsr()

    # Initial point: solve the regularized least-squares KKT system with W = I.
    try:
        kkt = _KktSolver(P, G, E, np.ones(m))
    except (RuntimeError, ValueError, np.linalg.LinAlgError):
        return np.full(n, np.nan), np.zeros(problem.num_cons), QpStatus.NUMERICAL_ERROR, 0
    sol = kkt.solve(np.concatenate([-q + GT @ h, e]))
    x, y = sol[:n], sol[n:]
    if warm_start is not None and np.all(np.isfinite(warm_start)):
        x = warm_start.copy()
    r = G @ x - h
    s, z = -r, r.copy()
    if m:
        alpha_p = -np.min(s)
        if alpha_p >= -1e-8:
            s += 1.0 + alpha_p
        alpha_d = -np.min(z)
        if alpha_d >= -1e-8:
            z += 1.0 + alpha_d

    eps_abs, eps_rel = settings.eps_abs, settings.eps_rel
    q_norm = np.linalg.norm(q, np.inf) if n else 0.0
    h_norm = np.linalg.norm(h, np.inf) if m else 0.0
    e_norm = np.linalg.norm(e, np.inf) if p else 0.0
    status = QpStatus.MAX_ITERATIONS
    max_iter = min(settings.max_iter, _MAX_IPM_ITER)
    it = 0
    for it in range(1, max_iter + 1):
        Px = P @ x
        Gx = G @ x
        Ex = E @ x
        rd = Px + q + ET @ y + GT @ z
        re = Ex - e
        ri = Gx + s - h
        gap = float(s @ z)
        mu = gap / m if m else 0.0

        pres = max(np.linalg.norm(re, np.inf) if p else 0.0, np.linalg.norm(ri, np.inf) if m else 0.0)
        dres = np.linalg.norm(rd, np.inf)
        pscale = max(h_norm, e_norm, np.linalg.norm(Gx, np.inf) if m else 0.0,
                     np.linalg.norm(Ex, np.inf) if p else 0.0)
        dscale = max(q_norm, np.linalg.norm(Px, np.inf))
        # The gap bounds the objective error, so its relative part is capped
        # to keep the reported objective accurate in absolute terms.
        pobj = 0.5 * x @ Px + q @ x
        if (pres <= eps_abs + eps_rel * pscale and dres <= eps_abs + eps_rel * dscale
                and gap <= eps_abs + eps_rel * min(abs(pobj), 1.0)):
            status = QpStatus.OPTIMAL
            break
        if m and _farkas_certificate(ET, GT, e, h, y, z):
            status = QpStatus.PRIMAL_INFEASIBLE
            break
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z)) and np.isfinite(gap)):
            status = QpStatus.NUMERICAL_ERROR
            break

        w = z / s if m else np.zeros(0)
        try:
            kkt = _KktSolver(P, G, E, w)
        except (RuntimeError, ValueError, np.linalg.LinAlgError):
            status = QpStatus.NUMERICAL_ERROR
            break

        def newton(rc):
            # ds = -ri - G dx ; dz = W G dx + S^-1 (Z ri - rc)
            tmp = (z * ri - rc) / s if m else np.zeros(0)
            rhs = np.concatenate([-rd - GT @ tmp, -re])
            d = kkt.solve(rhs)
            dx, dy = d[:n], d[n:]
            Gdx = G @ dx
            dz = w * Gdx + tmp
            ds = -ri - Gdx
            return dx, dy, ds, dz

        if m:
            dx, dy, ds, dz = newton(s * z)
            a_aff = min(_max_step(s, ds), _max_step(z, dz))
            mu_aff = float((s + a_aff * ds) @ (z + a_aff * dz)) / m
            sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
            dx, dy, ds, dz = newton(s * z + ds * dz - sigma * mu)
            a = min(1.0, _STEP_FRACTION * min(_max_step(s, ds), _max_step(z, dz)))
        else:
            dx, dy, ds, dz = newton(np.zeros(0))
            a = 1.0
        if not np.all(np.isfinite(dx)):
            status = QpStatus.NUMERICAL_ERROR
            break
        x = x + a * dx
        y = y + a * dy
        s = s + a * ds
        z = z + a * dz

    eq, up, dn = masks
    y_rows = np.zeros(problem.num_cons)
    y_rows[eq] = y
    n_up = int(np.count_nonzero(up))
    y_rows[up] += z[:n_up]
    y_rows[dn] -= z[n_up:]
    return x, y_rows, status, it


def _farkas_certificate(ET, GT, e, h, y, z, tol=1e-7):
    """Check whether the scaled duals prove ``{Ex = e, Gx <= h}`` empty."""
    scale = max(np.linalg.norm(z, np.inf), np.linalg.norm(y, np.inf) if y.size else 0.0)
    if scale < 1e3:
        return False
    yh, zh = y / scale, z / scale
    lhs = GT @ zh + (ET @ yh if yh.size else 0.0)
    bound = h @ zh + (e @ yh if yh.size else 0.0)
    return bool(np.linalg.norm(lhs, np.inf) <= tol and bound < -1e-4)
