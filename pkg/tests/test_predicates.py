import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from multiclock.behaviors import ClockId, ClockKind, ClockTrace, SyncMap, SystemBehavior, VariableDecl
from multiclock.controllers import Trajectory
from multiclock.mcl import BindError, Verdict, eval_global, parse
from multiclock.predicates import (
    CostFunction, DimensionMismatch, Limits, bounded_variation, close, cost, default_registry,
    inflate_cost_zero, respect_dynamics, trajectory_variation,
)

LIM = Limits(theta_max=math.pi / 4, omega_max=4.0, U=12.0)


def box_cost(radii=(0.1, 0.2), value=None):
    return CostFunction(np.zeros(2), np.array(radii), 1e-2,
                        value or (lambda p: float(np.dot(p, p))))


def test_close_examples():
    assert close((1, 0), (1, 0), 0)
    assert close((0, 0), (3, 4), 5)
    assert not close((0, 0), (3, 4), 4.99)
    with pytest.raises(DimensionMismatch):
        close((0, 0), (1, 2, 3), 1)
    with pytest.raises(ValueError):
        close((0, 0), (0, 0), -1)


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=2),
       st.lists(st.floats(-10, 10), min_size=2, max_size=2),
       st.floats(0, 20), st.floats(0, 5))
def test_close_symmetric_monotone(a, b, d, extra):
    assert close(a, b, d) == close(b, a, d)
    if close(a, b, d):
        assert close(a, b, d + extra)
    assert close(a, a, 0)


def test_bounded_variation_examples():
    T, F = Verdict.TRUE, Verdict.FALSE
    assert bounded_variation([np.ones(2), np.ones(2)], (0.0, 0.1), 0.0) is T
    assert bounded_variation([0.0, 1.0], (0.0, 0.1), 5) is F
    assert bounded_variation([0.0, 1.0], (0.0, 0.1), 9.9) is F
    assert bounded_variation([0.0, 1.0], (0.0, 0.1), 10.0) is T
    assert bounded_variation([0.0, 1.0], (0.0, 0.1), 11) is T
    assert bounded_variation([0.0], (0.0,), 1.0) is Verdict.INCONCLUSIVE


def _signal(values, times):
    clocks = [ClockId("a"), ClockId("r", ClockKind.PHYSICAL)]
    n = len(values)
    traces = {"a": ClockTrace("a", n, {"s": list(values)}), "r": ClockTrace("r", max(times) + 1, {})}
    syncs = {("a", "r"): SyncMap("a", "r", np.array(times))}
    return SystemBehavior(clocks, [VariableDecl("s", "a", "scalar")], traces, syncs, h=0.1)


def test_bounded_variation_predicate_in_formulas():
    beh = _signal([0.0, 1.0, 1.0], [0, 1, 2])
    assert eval_global(parse("@a. BoundedVariation(s; 11)"), beh) is Verdict.TRUE
    assert eval_global(parse("@a. BoundedVariation(s; 9)"), beh) is Verdict.FALSE
    assert eval_global(parse("@a. G[2,2] BoundedVariation(s; 9)"), beh) is Verdict.INCONCLUSIVE
    with pytest.raises(BindError):
        eval_global(parse("@a. BoundedVariation(s)"), beh)


def test_respect_dynamics_examples():
    assert respect_dynamics(Trajectory.constant(0.0, 0.05, 20), LIM)
    # demands twice the input bound as feedforward
    acc = 2 * LIM.U / (LIM.m * LIM.L**2)
    dt = 0.05
    theta = np.array([0.0, 0.5 * acc * dt**2])
    steep = Trajectory.from_knots(dt, theta, np.array([0.0, acc * dt]))
    assert not respect_dynamics(steep, LIM)
    assert not respect_dynamics(Trajectory.constant(1.0, 0.05, 4), LIM)


def test_respect_dynamics_grid_refinement_only_removes():
    rng = np.random.default_rng(2)
    for _ in range(50):
        theta = rng.uniform(-0.9, 0.9, 6)
        omega = rng.uniform(-4.5, 4.5, 6)
        tr = Trajectory.from_knots(0.05, theta, omega)
        if not respect_dynamics(tr, LIM, step=1e-2):
            assert not respect_dynamics(tr, LIM, step=1e-3)


def test_cost_examples():
    cf = box_cost(value=lambda p: 2.5e-2)
    assert cost(cf, np.zeros(2)) == 0
    assert cost(cf, np.array([0.1, -0.2])) == 0
    assert cost(cf, np.array([0.5, 0.0])) == 3
    unreachable = box_cost(value=lambda p: float("inf"))
    assert cost(unreachable, np.array([1.0, 0.0])) == math.inf


def test_cost_positive_outside():
    cf = box_cost(value=lambda p: 1e-9)
    assert cost(cf, np.array([0.3, 0.0])) == 1


def test_inflate_examples():
    cf = box_cost()
    still = Trajectory.constant(0.0, 0.05, 4)
    assert inflate_cost_zero(cf, still, 0.05)
    inside = Trajectory.constant(0.05, 0.05, 4)
    assert inflate_cost_zero(cf, inside, 0.0)
    touching = Trajectory.constant(0.1, 0.05, 4)
    assert inflate_cost_zero(cf, touching, 0.0)
    assert not inflate_cost_zero(cf, touching, 1e-3)


@given(st.floats(-0.1, 0.1), st.floats(0, 0.2), st.floats(0, 1))
def test_inflate_monotone(theta, delta, frac):
    cf = box_cost()
    tr = Trajectory.constant(theta, 0.05, 2)
    if inflate_cost_zero(cf, tr, delta):
        assert inflate_cost_zero(cf, tr, delta * frac)


def test_trajectory_variation_matches_derivative():
    tr = Trajectory.from_knots(0.05, [0.3, 0.2, 0.0], [0.0, -2.0, 0.0])
    ts = np.linspace(0, tr.horizon, 5001)
    _, rate, acc = tr.sample(ts)
    assert trajectory_variation(tr) <= np.max(np.hypot(rate, acc)) * 1.01


def test_registry_needs_configuration():
    reg = default_registry()
    beh = _signal([0.0], [0])
    with pytest.raises(BindError):
        eval_global(parse("@a. Cost(s)"), beh, registry=reg)
    with pytest.raises(BindError):
        eval_global(parse("@a. Unknown(s)"), beh, registry=reg)
