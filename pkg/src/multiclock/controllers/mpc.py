"""Receding-horizon planner on the upright linearization.

The program is the discretized form of the planning problem: quadratic
stage cost, exact zero-order-hold discretization of the linearized
pendulum, a free initial state within a box around the estimate, state
and input boxes, and the terminal equality ``x_N = 0``.  The solution
knots are turned into a cubic Bezier trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from ..plant import PendulumParams
from .qp import QPResult, solve_qp
from .trajectory import Trajectory


class Infeasible(RuntimeError):
    def __init__(self, msg, result: QPResult | None = None):
        super().__init__(msg)
        self.result = result


@dataclass
class MPCConfig:
    T: float = 1.0
    N: int = 20
    Q: tuple = (10.0, 1.0)
    R: float = 0.1
    U: float = 8.0
    box: tuple = (0.75, 3.6)
    init_radius: tuple = (0.01, 0.05)
    eps_qp: float = 1e-7
    max_iter: int = 4000

    def __post_init__(self):
        if self.N < 1 or self.T <= 0:
            raise ValueError("horizon and step count must be positive")
        if self.R <= 0 or min(self.Q) < 0:
            raise ValueError("need Q >= 0 and R > 0")

    @property
    def dt(self) -> float:
        return self.T / self.N


def linearization(p: PendulumParams):
    A = np.array([[0.0, 1.0], [p.g / p.L, 0.0]])
    B = np.array([0.0, 1.0 / p.inertia])
    return A, B


def discretize(A, B, dt):
    M = np.zeros((3, 3))
    M[:2, :2] = A
    M[:2, 2] = B
    E = expm(M * dt)
    return E[:2, :2], E[:2, 2]


@dataclass
class MPCSolution:
    trajectory: Trajectory
    cost: float
    states: np.ndarray
    inputs: np.ndarray
    result: QPResult = field(repr=False)

    @property
    def kkt(self) -> float:
        return self.result.kkt.get("max", float("nan"))


class MPC:
    def __init__(self, cfg: MPCConfig, plant: PendulumParams):
        self.cfg = cfg
        self.plant = plant
        A, B = linearization(plant)
        if np.linalg.matrix_rank(np.column_stack([B, A @ B])) < 2:
            raise ValueError("linearization is not controllable")
        self.Ad, self.Bd = discretize(A, B, cfg.dt)
        self._build()
        self._warm = None
        self._values: dict = {}

    def _build(self):
        N = self.cfg.N
        nx = 2 * (N + 1)
        n = nx + N
        self.n = n
        P = np.zeros((n, n))
        Q = np.diag(self.cfg.Q)
        for k in range(N):
            P[2 * k:2 * k + 2, 2 * k:2 * k + 2] = 2 * Q
            P[nx + k, nx + k] = 2 * self.cfg.R
        rows = []
        # dynamics x_{k+1} = Ad x_k + Bd u_k
        for k in range(N):
            for i in range(2):
                r = np.zeros(n)
                r[2 * (k + 1) + i] = 1.0
                r[2 * k:2 * k + 2] = -self.Ad[i]
                r[nx + k] = -self.Bd[i]
                rows.append(r)
        self.n_dyn = len(rows)
        # x_0 .. x_N and u_0 .. u_{N-1} as plain bounds
        rows.extend(np.eye(n))
        self.Aqp = np.array(rows)
        self.P = P
        self.q = np.zeros(n)
        box = np.array(self.cfg.box, dtype=float)
        lo = [np.zeros(self.n_dyn)]
        hi = [np.zeros(self.n_dyn)]
        for k in range(N + 1):
            if k == N:
                lo.append(np.zeros(2))
                hi.append(np.zeros(2))
            else:
                lo.append(-box)
                hi.append(box)
        lo.append(np.full(N, -self.cfg.U))
        hi.append(np.full(N, self.cfg.U))
        self.lo = np.concatenate(lo)
        self.hi = np.concatenate(hi)

    def bounds(self, xhat, radius):
        lo, hi = self.lo.copy(), self.hi.copy()
        i0 = self.n_dyn
        box = np.array(self.cfg.box, dtype=float)
        lo[i0:i0 + 2] = np.maximum(np.asarray(xhat) - radius, -box)
        hi[i0:i0 + 2] = np.minimum(np.asarray(xhat) + radius, box)
        return lo, hi

    def _solve(self, xhat, radius, warm):
        lo, hi = self.bounds(xhat, np.asarray(radius, dtype=float))
        return solve_qp(self.P, self.q, self.Aqp, lo, hi, eps=self.cfg.eps_qp,
                        max_iter=self.cfg.max_iter, warm=warm)

    def solve(self, xhat) -> MPCSolution:
        xhat = np.asarray(xhat, dtype=float)
        if not np.all(np.isfinite(xhat)):
            raise ValueError("estimate is not finite")
        res = self._solve(xhat, self.cfg.init_radius, self._warm)
        if not res.ok and self._warm is not None:
            res = self._solve(xhat, self.cfg.init_radius, None)
        if not res.ok:
            raise Infeasible(f"planning problem infeasible from {xhat}", res)
        self._warm = res.warm
        return self._package(res)

    def _package(self, res: QPResult) -> MPCSolution:
        N = self.cfg.N
        z = res.x
        X = z[:2 * (N + 1)].reshape(N + 1, 2)
        U = z[2 * (N + 1):]
        traj = Trajectory.from_knots(self.cfg.dt, X[:, 0], X[:, 1])
        return MPCSolution(traj, res.obj, X, U, res)

    def value(self, p) -> float:
        """Optimal cost with the initial state pinned to ``p`` (inf if infeasible)."""
        p = np.asarray(p, dtype=float)
        key = p.tobytes()
        if key not in self._values:
            res = self._solve(p, np.zeros(2), None)
            self._values[key] = res.obj if res.ok else float("inf")
        return self._values[key]
