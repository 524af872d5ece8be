"""Piecewise cubic Bezier reference trajectories for the pendulum angle."""

from __future__ import annotations

import numpy as np


class Trajectory:
    """theta_d(t) as one cubic Bezier segment per interval of length ``dt``.

    ``ctrl[k]`` holds the four control points of segment ``k``.  Past the
    horizon the final state is held with zero acceleration.
    """

    def __init__(self, dt: float, ctrl):
        self.dt = float(dt)
        self.ctrl = np.asarray(ctrl, dtype=float).reshape(-1, 4)

    @classmethod
    def from_knots(cls, dt, theta, omega):
        """Cubic Hermite segments matching knot angles and rates (C1)."""
        theta = np.asarray(theta, dtype=float)
        omega = np.asarray(omega, dtype=float)
        if theta.shape != omega.shape or theta.ndim != 1 or len(theta) < 2:
            raise ValueError("need matching 1-d knot arrays with at least two knots")
        ctrl = np.column_stack(
            [
                theta[:-1],
                theta[:-1] + omega[:-1] * dt / 3,
                theta[1:] - omega[1:] * dt / 3,
                theta[1:],
            ]
        )
        return cls(dt, ctrl)

    @classmethod
    def constant(cls, theta: float, dt: float = 0.05, n: int = 1):
        return cls(dt, np.full((n, 4), float(theta)))

    @property
    def segments(self) -> int:
        return len(self.ctrl)

    @property
    def horizon(self) -> float:
        return self.dt * len(self.ctrl)

    def expired(self, t: float) -> bool:
        return t > self.horizon + 1e-12

    def _locate(self, t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.horizon)
        k = np.minimum((t / self.dt).astype(int), len(self.ctrl) - 1)
        s = t / self.dt - k
        return k, s, t

    def sample(self, t):
        """Angle, rate and acceleration at the given times (arrays)."""
        t_in = np.asarray(t, dtype=float)
        k, s, _ = self._locate(t_in)
        p = self.ctrl[k]
        a = 1.0 - s
        theta = a**3 * p[..., 0] + 3 * a * a * s * p[..., 1] + 3 * a * s * s * p[..., 2] + s**3 * p[..., 3]
        d = np.diff(p, axis=-1)
        rate = 3 * (a * a * d[..., 0] + 2 * a * s * d[..., 1] + s * s * d[..., 2]) / self.dt
        dd = np.diff(d, axis=-1)
        acc = 6 * (a * dd[..., 0] + s * dd[..., 1]) / self.dt**2
        acc = np.where(t_in > self.horizon + 1e-12, 0.0, acc)
        return theta, rate, acc

    def state(self, t: float) -> np.ndarray:
        theta, rate, _ = self.sample(t)
        return np.array([float(theta), float(rate)])

    def accel(self, t: float) -> float:
        return float(self.sample(t)[2])

    __call__ = state

    def knots(self) -> np.ndarray:
        return np.append(self.ctrl[:, 0], self.ctrl[-1, 3])

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.dt == other.dt and np.array_equal(self.ctrl, other.ctrl)

    def __repr__(self):
        return f"Trajectory(dt={self.dt}, segments={len(self.ctrl)})"
