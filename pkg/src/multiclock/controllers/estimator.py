"""Bounded-noise state estimator."""

from __future__ import annotations

import numpy as np


class Estimator:
    """x_hat = x + eta with ||eta|| <= delta, eta uniform in the disk."""

    def __init__(self, delta: float, seed: int = 0):
        if delta < 0:
            raise ValueError("noise bound must be nonnegative")
        self.delta = float(delta)
        self.rng = np.random.default_rng(seed)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.delta == 0:
            return x.copy()
        r = self.delta * np.sqrt(self.rng.uniform())
        a = self.rng.uniform(0.0, 2 * np.pi)
        eta = np.array([r * np.cos(a), r * np.sin(a)])
        n = np.linalg.norm(eta)
        if n > self.delta:
            eta *= self.delta / n
        return x + eta


def estimate(x_true, delta: float, rng_seed: int = 0) -> np.ndarray:
    return Estimator(delta, rng_seed)(x_true)
