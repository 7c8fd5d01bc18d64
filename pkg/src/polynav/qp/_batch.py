"""Vectorized interior-point solver for stacks of tiny dense QPs.

Every closest-point query at a planner iteration is a QP with 2*l variables
and a handful of facet rows; solving them together amortizes the Python
overhead.  Problems that have converged drop out of the working set.  A
problem whose duality gap stalls (the Newton system becomes ill-conditioned
near degenerate optima) is finished by an active-set polish: solve the
equality-constrained KKT system on the rows guessed active and accept the
result if it is primal and dual feasible.
"""

from __future__ import annotations

import numpy as np

from . import QpStatus

_STEP_FRACTION = 0.99
_STALL_WINDOW = 6


def _max_step(v, dv):
    ratio = np.where(dv < 0, -v / np.where(dv < 0, dv, -1.0), np.inf)
    return np.minimum(1.0, ratio.min(axis=1))


def _polish(P, q, G, h, s, z, tol):
    """Active-set refinement of one problem; returns x or None."""
    n = P.shape[0]
    active = s < z
    if not active.any():
        x = np.linalg.lstsq(P, -q, rcond=None)[0]
        ok = np.all(G @ x <= h + tol)
        return x if ok else None
    GA = G[active]
    k = GA.shape[0]
    K = np.block([[P, GA.T], [GA, np.zeros((k, k))]])
    rhs = np.concatenate([-q, h[active]])
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    x, zA = sol[:n], sol[n:]
    if np.all(G @ x <= h + tol) and np.all(zA >= -tol):
        return x
    return None


def _solve_stack(H, rhs):
    """Batched ``H x = rhs``; singular members fall back to least squares."""
    try:
        return np.linalg.solve(H, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.full(rhs.shape, np.nan)
        for b in range(H.shape[0]):
            if np.isfinite(H[b]).all() and np.isfinite(rhs[b]).all():
                out[b] = np.linalg.lstsq(H[b], rhs[b], rcond=None)[0]
        return out


def solve_batch(P, q, G, h, tol=1e-10, max_iter=60):
    P = np.asarray(P, dtype=float)
    q = np.asarray(q, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    B, m, n = G.shape
    if B == 0:
        return np.zeros((0, n)), np.array([], dtype=object), 0
    P = np.broadcast_to(P, (B, n, n))
    GT = np.swapaxes(G, 1, 2)
    eye = np.eye(n)

    # Initial point from the W = I system, then shift slacks/duals inside the cone.
    H = P + GT @ G
    x = np.linalg.solve(H, (-q[..., None] + GT @ h[..., None]))[..., 0]
    r = (G @ x[..., None])[..., 0] - h
    s, z = -r, r.copy()
    shift_s = -s.min(axis=1, keepdims=True)
    s = np.where(shift_s >= -1e-8, s + 1.0 + shift_s, s)
    shift_z = -z.min(axis=1, keepdims=True)
    z = np.where(shift_z >= -1e-8, z + 1.0 + shift_z, z)

    status = np.full(B, QpStatus.MAX_ITERATIONS, dtype=object)
    scale = 1.0 + np.abs(h).max(axis=1)
    best_gap = np.full(B, np.inf)
    since_best = np.zeros(B, dtype=int)
    work = np.arange(B)
    it = 0
    for it in range(1, max_iter + 1):
        Pw, Gw, GTw, hw, qw = P[work], G[work], GT[work], h[work], q[work]
        xw, sw, zw = x[work], s[work], z[work]
        rd = (Pw @ xw[..., None])[..., 0] + qw + (GTw @ zw[..., None])[..., 0]
        ri = (Gw @ xw[..., None])[..., 0] + sw - hw
        gap = np.einsum("bi,bi->b", sw, zw)
        mu = gap / m
        sc = scale[work]
        conv = (np.abs(ri).max(axis=1) <= tol * sc) & (np.abs(rd).max(axis=1) <= tol * sc) & (gap <= tol * sc)
        bad = ~(np.isfinite(xw).all(axis=1) & np.isfinite(zw).all(axis=1))
        status[work[conv]] = QpStatus.OPTIMAL
        status[work[bad]] = QpStatus.NUMERICAL_ERROR

        improved = gap < 0.5 * best_gap[work]
        best_gap[work] = np.where(improved, gap, best_gap[work])
        since_best[work] = np.where(improved, 0, since_best[work] + 1)
        stalled = ~conv & ~bad & (since_best[work] >= _STALL_WINDOW)
        for b in work[stalled]:
            xp = _polish(P[b], q[b], G[b], h[b], s[b], z[b], 1e-9 * scale[b])
            if xp is not None:
                x[b] = xp
                status[b] = QpStatus.OPTIMAL
            else:
                since_best[b] = 0
        keep = status[work] == QpStatus.MAX_ITERATIONS
        if not keep.all():
            work = work[keep]
            if work.size == 0:
                break
            Pw, Gw, GTw, hw, qw = P[work], G[work], GT[work], h[work], q[work]
            xw, sw, zw = x[work], s[work], z[work]
            rd, ri, mu = rd[keep], ri[keep], mu[keep]

        w = zw / sw
        Hw = Pw + GTw @ (w[..., None] * Gw) + 1e-13 * eye

        def newton(rc):
            tmp = (zw * ri - rc) / sw
            rhs = -rd - (GTw @ tmp[..., None])[..., 0]
            dx = _solve_stack(Hw, rhs)
            Gdx = (Gw @ dx[..., None])[..., 0]
            return dx, -ri - Gdx, w * Gdx + tmp

        with np.errstate(all="ignore"):
            dx, ds, dz = newton(sw * zw)
            a_aff = np.minimum(_max_step(sw, ds), _max_step(zw, dz))
            mu_aff = np.einsum("bi,bi->b", sw + a_aff[:, None] * ds, zw + a_aff[:, None] * dz) / m
            sigma = np.where(mu > 0, (mu_aff / np.where(mu > 0, mu, 1.0)) ** 3, 0.0)
            dx, ds, dz = newton(sw * zw + ds * dz - (sigma * mu)[:, None])
            a = np.minimum(1.0, _STEP_FRACTION * np.minimum(_max_step(sw, ds), _max_step(zw, dz)))
        a = np.where(np.isfinite(a), a, 0.0)
        finite = np.isfinite(dx).all(axis=1) & np.isfinite(ds).all(axis=1) & np.isfinite(dz).all(axis=1)
        a = np.where(finite, a, 0.0)
        dx, ds, dz = (np.where(finite[:, None], d, 0.0) for d in (dx, ds, dz))
        x[work] = xw + a[:, None] * dx
        s[work] = sw + a[:, None] * ds
        z[work] = zw + a[:, None] * dz

    for b in np.flatnonzero(status == QpStatus.MAX_ITERATIONS):
        xp = _polish(P[b], q[b], G[b], h[b], s[b], z[b], 1e-9 * scale[b])
        if xp is not None:
            x[b] = xp
            status[b] = QpStatus.OPTIMAL
    return x, status, it
