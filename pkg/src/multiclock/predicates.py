"""Named atomic predicates used by the shipped contracts.

Each predicate is a plain function with an explicit definition; the
registry adapts them to the evaluator, which hands over an
``AtomContext`` (for reads relative to the current tick) and the raw
argument terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .mcl.evaluate import BindError, Verdict


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Limits:
    """State box and input bound that reference trajectories must respect."""

    theta_max: float
    omega_max: float
    U: float
    m: float = 1.0
    L: float = 1.0
    g: float = 9.81


@dataclass
class CostFunction:
    """Quantized cost: zero on the box around ``center``, else ceil(V/q)."""

    center: np.ndarray
    radii: np.ndarray
    q: float = 1e-2
    value: Optional[Callable[[np.ndarray], float]] = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.radii = np.asarray(self.radii, dtype=float)
        if self.q <= 0:
            raise ValueError("quantization must be positive")

    def inside(self, p, shrink: float = 0.0) -> bool:
        d = np.abs(np.asarray(p, dtype=float) - self.center)
        return bool(np.all(d + shrink <= self.radii + 1e-12))

    def __call__(self, p) -> float:
        return cost(self, p)


def close(a, b, delta: float) -> bool:
    """l2 distance at most delta."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    return bool(np.linalg.norm(a - b) <= delta)


def cost(cf: CostFunction, p) -> float:
    """B(p): 0 inside the box, otherwise ceil(V(p)/q); inf if V is undefined."""
    p = np.asarray(p, dtype=float)
    if cf.inside(p):
        return 0
    if cf.value is None:
        raise BindError("cost function has no value function outside its box")
    key = p.tobytes()
    if key not in cf._cache:
        v = cf.value(p)
        cf._cache[key] = math.inf if not math.isfinite(v) else max(1, math.ceil(v / cf.q - 1e-12))
    return cf._cache[key]


def _grid(traj, step: float) -> np.ndarray:
    ts = np.union1d(np.arange(0.0, traj.horizon + step / 2, step),
                    traj.dt * np.arange(traj.segments + 1))
    # knot times and grid times can differ by round-off only
    keep = np.concatenate([[True], np.diff(ts) > 1e-9])
    return ts[keep]


def respect_dynamics(traj, limits: Limits, step: float = 1e-3) -> bool:
    """Box membership and feedforward input bound on a time grid."""
    theta, rate, acc = traj.sample(_grid(traj, step))
    if np.any(np.abs(theta) > limits.theta_max + 1e-9):
        return False
    if np.any(np.abs(rate) > limits.omega_max + 1e-9):
        return False
    ml2 = limits.m * limits.L**2
    u_ff = ml2 * (-(limits.g / limits.L) * np.sin(theta) + acc)
    return bool(np.all(np.abs(u_ff) <= limits.U + 1e-9))


def trajectory_variation(traj, step: float = 1e-3) -> float:
    """Largest ||x_d(t') - x_d(t)|| / (t' - t) over consecutive grid times."""
    ts = _grid(traj, step)
    theta, rate, _ = traj.sample(ts)
    dx = np.hypot(np.diff(theta), np.diff(rate))
    return float(np.max(dx / np.diff(ts))) if len(ts) > 1 else 0.0


def inflate_cost_zero(cf: CostFunction, traj, delta: float, step: float = 1e-3) -> bool:
    """Every delta-ball around the trajectory image lies in the cost-zero box."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    theta, rate, _ = traj.sample(_grid(traj, step))
    d = np.abs(np.column_stack([theta, rate]) - cf.center)
    return bool(np.all(d + delta <= cf.radii + 1e-12))


def bounded_variation(values, times, D: float) -> Verdict:
    """Lipschitz-in-time check between two consecutive observations."""
    if D < 0:
        raise ValueError("D must be nonnegative")
    if len(values) < 2:
        return Verdict.INCONCLUSIVE
    a = np.atleast_1d(np.asarray(values[0], dtype=float))
    b = np.atleast_1d(np.asarray(values[1], dtype=float))
    dist = float(np.linalg.norm(b - a))
    dt = abs(times[1] - times[0])
    return Verdict.of(dist <= D * dt + 1e-12)


class PredicateRegistry(dict):
    """Name to predicate map plus the configuration some predicates need."""

    def __init__(self, limits: Optional[Limits] = None, cost_fn: Optional[CostFunction] = None,
                 step: float = 1e-3):
        super().__init__()
        self.limits = limits
        self.cost_fn = cost_fn
        self.step = step
        self._rd_cache: dict = {}

    def get(self, name):
        try:
            return self[name]
        except KeyError:
            raise BindError(f"unknown predicate {name!r}") from None

    def need_limits(self) -> Limits:
        if self.limits is None:
            raise BindError("RespectDynamics needs plant limits in the registry")
        return self.limits

    def need_cost(self) -> CostFunction:
        if self.cost_fn is None:
            raise BindError("cost predicates need a cost function in the registry")
        return self.cost_fn

    def cached_respect(self, traj) -> bool:
        hit = self._rd_cache.get(id(traj))
        if hit is None or hit[0] is not traj:
            hit = (traj, respect_dynamics(traj, self.need_limits(), self.step))
            self._rd_cache[id(traj)] = hit
        return hit[1]


def _arity(args, n, name):
    if len(args) != n:
        raise BindError(f"{name} takes {n} argument(s), got {len(args)}")


def _param(ctx, i, name):
    if len(ctx.params) <= i:
        raise BindError(f"{name} is missing parameter {i + 1}")
    return float(ctx.params[i])


def _close(ctx, args):
    _arity(args, 2, "Close")
    return close(ctx.value(args[0]), ctx.value(args[1]), _param(ctx, 0, "Close"))


def _bounded_variation(ctx, args):
    _arity(args, 1, "BoundedVariation")
    D = _param(ctx, 0, "BoundedVariation")
    first = ctx.value(args[0])
    if hasattr(first, "sample"):
        return trajectory_variation(first, ctx.registry.step) <= D + 1e-12
    from .behaviors import OutOfTrace

    try:
        second = ctx.value(args[0], 1)
        times = (ctx.time(0), ctx.time(1))
    except OutOfTrace:
        return Verdict.INCONCLUSIVE
    return bounded_variation([first, second], times, D)


def _respect(ctx, args):
    _arity(args, 1, "RespectDynamics")
    traj = ctx.value(args[0])
    if traj is None or not hasattr(traj, "sample"):
        raise BindError("RespectDynamics expects a trajectory")
    return ctx.registry.cached_respect(traj)


def _cost(ctx, args):
    cf = ctx.registry.need_cost()
    if len(args) == 1:
        return cost(cf, ctx.value(args[0])) == 0
    _arity(args, 2, "Cost")
    return cost(cf, ctx.value(args[0])) > cost(cf, ctx.value(args[1]))


def _cost_zero_inflated(ctx, args):
    _arity(args, 1, "CostZeroInflated")
    traj = ctx.value(args[0])
    delta = _param(ctx, 0, "CostZeroInflated")
    return inflate_cost_zero(ctx.registry.need_cost(), traj, delta, ctx.registry.step)


def default_registry(limits: Optional[Limits] = None, cost_fn: Optional[CostFunction] = None,
                     step: float = 1e-3) -> PredicateRegistry:
    reg = PredicateRegistry(limits, cost_fn, step)
    reg.update(
        Close=_close,
        BoundedVariation=_bounded_variation,
        RespectDynamics=_respect,
        Cost=_cost,
        CostZeroInflated=_cost_zero_inflated,
    )
    return reg
