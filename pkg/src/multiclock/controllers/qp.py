"""Small dense convex QP solver.

    minimize    1/2 z'Pz + q'z
    subject to  l <= Az <= u

Operator splitting (the OSQP iteration, dense and unscaled) finds the
active set; an active-set refinement then solves the KKT system on it
exactly, which brings residuals down to round-off.  Everything is
deterministic: fixed iteration order, no randomness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve


@dataclass
class QPResult:
    status: str  # 'solved', 'infeasible', 'iter_limit'
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    obj: float = float("inf")
    iterations: int = 0
    kkt: dict = field(default_factory=dict)
    warm: tuple | None = None

    @property
    def ok(self) -> bool:
        return self.status in ("solved", "iter_limit")


def kkt_residuals(P, q, A, l, u, x, y) -> dict:
    """Stationarity, primal and dual-sign violations, and complementarity."""
    Ax = A @ x
    stat = np.max(np.abs(P @ x + q + A.T @ y), initial=0.0)
    primal = np.max(np.maximum(Ax - u, 0) + np.maximum(l - Ax, 0), initial=0.0)
    eq = np.isclose(l, u)
    up = np.where(y > 0, y * (u - Ax), 0.0)
    lo = np.where(y < 0, -y * (Ax - l), 0.0)
    comp = np.max(np.abs(np.where(eq, 0.0, up + lo)), initial=0.0)
    return {"stationarity": float(stat), "primal": float(primal),
            "complementarity": float(comp), "max": float(max(stat, primal, comp))}


def _admm(P, q, A, l, u, eps, max_iter, rho, sigma, alpha, warm):
    n, m = P.shape[0], A.shape[0]
    eq = np.isclose(l, u)
    rho_v = np.where(eq, 1e3 * rho, rho)
    K = P + sigma * np.eye(n) + A.T @ (rho_v[:, None] * A)
    fac = cho_factor(K)
    if warm is not None:
        x, z, y = (np.array(v, dtype=float) for v in warm)
    else:
        x, z, y = np.zeros(n), np.clip(np.zeros(m), l, u), np.zeros(m)
    infeasible = False
    k = 0
    for k in range(1, max_iter + 1):
        xt = cho_solve(fac, sigma * x - q + A.T @ (rho_v * z - y))
        zt = A @ xt
        x = alpha * xt + (1 - alpha) * x
        zr = alpha * zt + (1 - alpha) * z
        z_new = np.clip(zr + y / rho_v, l, u)
        dy = rho_v * (zr - z_new)
        y = y + dy
        z = z_new
        if k % 10 == 0:
            r_prim = np.max(np.abs(A @ x - z), initial=0.0)
            r_dual = np.max(np.abs(P @ x + q + A.T @ y), initial=0.0)
            scale = max(1.0, np.max(np.abs(z), initial=0.0))
            if r_prim <= eps * scale and r_dual <= eps * max(1.0, np.max(np.abs(q), initial=0.0)):
                break
            ndy = np.max(np.abs(dy), initial=0.0)
            if ndy > 1e-12:
                cert = u @ np.maximum(dy, 0) + l @ np.minimum(dy, 0)
                if np.max(np.abs(A.T @ dy)) <= 1e-6 * ndy and cert < -1e-6 * ndy:
                    infeasible = True
                    break
    return x, z, y, k, infeasible


def _refine(P, q, A, l, u, y, tol, max_rounds=60):
    """Active-set iteration seeded from the multipliers' sign pattern."""
    n, m = P.shape[0], A.shape[0]
    eq = np.isclose(l, u)
    upper = set(np.flatnonzero((y > tol) & ~eq))
    lower = set(np.flatnonzero((y < -tol) & ~eq))
    eq_rows = list(np.flatnonzero(eq))
    for _ in range(max_rounds):
        rows = eq_rows + sorted(upper) + sorted(lower)
        b = np.concatenate([l[eq_rows], u[sorted(upper)], l[sorted(lower)]])
        Aw = A[rows]
        kk = len(rows)
        KKT = np.block([[P, Aw.T], [Aw, np.zeros((kk, kk))]])
        rhs = np.concatenate([-q, b])
        sol = np.linalg.lstsq(KKT, rhs, rcond=None)[0]
        x, nu = sol[:n], sol[n:]
        y_full = np.zeros(m)
        y_full[rows] = nu
        Ax = A @ x
        viol = np.maximum(Ax - u, l - Ax)
        viol[rows] = -np.inf
        worst = int(np.argmax(viol)) if m else 0
        if m and viol[worst] > tol:
            (upper if Ax[worst] > u[worst] else lower).add(worst)
            continue
        wrong = np.zeros(m)
        for i in upper:
            wrong[i] = max(0.0, -y_full[i])
        for i in lower:
            wrong[i] = max(0.0, y_full[i])
        bad = int(np.argmax(wrong)) if m else 0
        if m and wrong[bad] > tol:
            upper.discard(bad)
            lower.discard(bad)
            continue
        return x, y_full
    return None


def solve_qp(P, q, A, l, u, eps: float = 1e-7, max_iter: int = 4000, rho: float = 1.0,
             sigma: float = 1e-6, alpha: float = 1.6, warm=None, tol: float = 1e-6) -> QPResult:
    """Solve the QP; residuals of a 'solved' point are at most ``tol``.

    Splitting runs in stages; after each stage the active-set refinement
    is attempted, so easy problems stop after a couple hundred sweeps.
    """
    P = np.asarray(P, dtype=float)
    q = np.asarray(q, dtype=float)
    A = np.asarray(A, dtype=float)
    l = np.asarray(l, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(l > u + 1e-12):
        return QPResult("infeasible", kkt={"reason": "empty bounds"})
    done, state = 0, warm
    x = y = None
    for budget in (200, 800, max_iter):
        budget = min(budget, max_iter) - done
        if budget <= 0:
            continue
        x, z, y, it, infeasible = _admm(P, q, A, l, u, eps, budget, rho, sigma, alpha, state)
        done += it
        state = (x, z, y)
        if infeasible:
            return QPResult("infeasible", iterations=done, kkt={"reason": "certificate"})
        refined = _refine(P, q, A, l, u, y, tol * 1e-2)
        if refined is not None:
            xr, yr = refined
            res = kkt_residuals(P, q, A, l, u, xr, yr)
            if res["max"] <= tol:
                obj = 0.5 * xr @ P @ xr + q @ xr
                return QPResult("solved", xr, yr, float(obj), done, res, state)
    res = kkt_residuals(P, q, A, l, u, x, y)
    if res["primal"] <= tol:
        return QPResult("iter_limit", x, y, float(0.5 * x @ P @ x + q @ x), done, res, state)
    return QPResult("infeasible", iterations=done, kkt=dict(res, reason="no feasible iterate"))
