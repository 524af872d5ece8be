"""Inverted pendulum dynamics and a fixed-step RK4 integrator.

theta = 0 is the upright equilibrium and gravity pushes away from it:
``theta'' = (g/L) sin(theta) + u / (m L^2)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


class NonFiniteState(ArithmeticError):
    pass


@dataclass(frozen=True)
class PendulumParams:
    m: float = 1.0
    L: float = 1.0
    g: float = 9.81
    U: float = 12.0
    theta_max: float = math.pi / 4
    omega_max: float = 4.0

    def __post_init__(self):
        for name in ("m", "L", "g", "U", "theta_max", "omega_max"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @property
    def inertia(self) -> float:
        return self.m * self.L**2

    def in_box(self, x, tol: float = 0.0) -> bool:
        return abs(x[0]) <= self.theta_max + tol and abs(x[1]) <= self.omega_max + tol


@dataclass(frozen=True)
class LipschitzConstants:
    L_f: float
    L_g: float
    G: float


def drift_and_actuation(x, p: PendulumParams):
    """f(x) and g(x) of the control-affine form."""
    f = np.array([x[1], (p.g / p.L) * math.sin(x[0])])
    g = np.array([0.0, 1.0 / p.inertia])
    return f, g


def saturate(u: float, p: PendulumParams) -> tuple[float, bool]:
    if u > p.U:
        return p.U, True
    if u < -p.U:
        return -p.U, True
    return u, False


class Integrator:
    """RK4 stepping with input saturation; counts saturation events."""

    def __init__(self, p: PendulumParams):
        self.p = p
        self.saturations = 0
        self._a = p.g / p.L
        self._b = 1.0 / p.inertia

    def step(self, x, u: float, h: float) -> np.ndarray:
        if h <= 0:
            raise ValueError("step must be positive")
        u, hit = saturate(float(u), self.p)
        if hit:
            self.saturations += 1
            if self.saturations == 1:
                log.warning("input saturated at +/-%g", self.p.U)
        th, om = float(x[0]), float(x[1])
        a, bu = self._a, self._b * u
        k1t, k1o = om, a * math.sin(th) + bu
        k2t, k2o = om + 0.5 * h * k1o, a * math.sin(th + 0.5 * h * k1t) + bu
        k3t, k3o = om + 0.5 * h * k2o, a * math.sin(th + 0.5 * h * k2t) + bu
        k4t, k4o = om + h * k3o, a * math.sin(th + h * k3t) + bu
        th += h / 6 * (k1t + 2 * k2t + 2 * k3t + k4t)
        om += h / 6 * (k1o + 2 * k2o + 2 * k3o + k4o)
        if not (math.isfinite(th) and math.isfinite(om)):
            raise NonFiniteState(f"integration blew up from x={x}, u={u}")
        return np.array([th, om])


def step(x, u: float, h: float, p: PendulumParams) -> np.ndarray:
    return Integrator(p).step(x, u, h)


def energy(x, p: PendulumParams) -> float:
    return 0.5 * p.inertia * x[1] ** 2 + p.m * p.g * p.L * math.cos(x[0])


def lipschitz_constants(p: PendulumParams) -> LipschitzConstants:
    """Jacobian bound of f, Lipschitz constant of g and a bound on ||g||."""
    return LipschitzConstants(L_f=max(1.0, p.g / p.L), L_g=0.0, G=1.0 / p.inertia)


def max_rate(p: PendulumParams, U: float | None = None) -> float:
    """sup ||f(x) + g(x) u|| over the state box and |u| <= U."""
    U = p.U if U is None else U
    s = math.sin(min(p.theta_max, math.pi / 2))
    return math.hypot(p.omega_max, (p.g / p.L) * s + U / p.inertia)
