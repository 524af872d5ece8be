"""Feedback-linearizing tracker and its exponential error envelope."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ..plant import PendulumParams


class NotHurwitz(ValueError):
    pass


class TrajectoryExpired(RuntimeError):
    pass


@dataclass(frozen=True)
class FBLGains:
    K1: float
    K2: float

    def __post_init__(self):
        if not (self.K1 > 0 and self.K2 > 0):
            raise NotHurwitz(f"gains must be elementwise positive, got ({self.K1}, {self.K2})")

    @property
    def A_cl(self) -> np.ndarray:
        return np.array([[0.0, 1.0], [-self.K1, -self.K2]])


@dataclass(frozen=True)
class Envelope:
    M: float
    lam: float


def fbl_control(x, traj, t: float, gains: FBLGains, p: PendulumParams,
                strict: bool = False) -> tuple[float, bool]:
    """Torque that makes the tracking error obey e' = A_cl e.

    Returns ``(u, expired)``.  Past the trajectory horizon the last
    setpoint is held with zero feedforward; ``strict`` raises instead.
    """
    expired = traj.expired(t)
    if expired and strict:
        raise TrajectoryExpired(f"t={t} beyond horizon {traj.horizon}")
    theta_d, rate_d, acc_d = (float(v) for v in traj.sample(t))
    e1 = x[0] - theta_d
    e2 = x[1] - rate_d
    v = acc_d - gains.K1 * e1 - gains.K2 * e2
    u = p.inertia * (-(p.g / p.L) * math.sin(x[0]) + v)
    return u, expired


def gains_to_envelope(gains: FBLGains, margin: float = 0.05, grid: int = 4000) -> Envelope:
    """Envelope of the closed-loop error dynamics for the given gains."""
    return matrix_envelope(gains.A_cl, margin, grid)


def matrix_envelope(A, margin: float = 0.05, grid: int = 4000) -> Envelope:
    """lambda below the slowest mode and M = sup_t ||exp(A t)|| exp(lambda t).

    The supremum is taken on a grid over [0, t0] where ||exp(B t0)|| < 1
    for B = A + lambda I; submultiplicativity bounds the tail by the
    same supremum, and a factor exp(||B|| dt) covers the grid gaps.
    """
    A = np.asarray(A, dtype=float)
    alpha = -max(np.linalg.eigvals(A).real)
    if alpha <= 0:
        raise NotHurwitz("closed-loop matrix is not Hurwitz")
    lam = alpha * (1 - margin)
    B = A + lam * np.eye(len(A))
    t0 = 1.0 / alpha
    while np.linalg.norm(expm(B * t0), 2) >= 1.0:
        t0 *= 2
    ts = np.linspace(0.0, t0, grid + 1)
    step = expm(B * (ts[1] - ts[0]))
    E = np.eye(len(A))
    best = 1.0
    for _ in ts[1:]:
        E = E @ step
        best = max(best, np.linalg.norm(E, 2))
    M = best * math.exp(np.linalg.norm(B, 2) * (ts[1] - ts[0]))
    return Envelope(M=float(M), lam=float(lam))
