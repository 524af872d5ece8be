import logging
import math

import numpy as np
import pytest

from multiclock.plant import (
    Integrator, NonFiniteState, PendulumParams, drift_and_actuation, energy, lipschitz_constants,
    max_rate, step,
)

P = PendulumParams()


def test_drift_examples():
    f, g = drift_and_actuation(np.zeros(2), P)
    assert np.allclose(f, 0) and np.allclose(g, (0, 1))
    f, _ = drift_and_actuation(np.array([math.pi / 6, 0.0]), P)
    assert f == pytest.approx((0.0, 4.905))


def test_fixed_point():
    assert np.array_equal(step(np.zeros(2), 0.0, 1e-3, P), np.zeros(2))


def test_energy_conservation_against_fine_reference():
    x = np.array([0.3, 0.0])
    coarse = Integrator(P)
    xs = x.copy()
    for _ in range(1000):
        xs = coarse.step(xs, 0.0, 1e-3)
    fine = Integrator(P)
    xf = x.copy()
    for _ in range(10000):
        xf = fine.step(xf, 0.0, 1e-4)
    assert abs(energy(xs, P) - energy(x, P)) < 1e-6
    assert np.linalg.norm(xs - xf) < 1e-6


def test_saturation_logged(caplog):
    integ = Integrator(P)
    with caplog.at_level(logging.WARNING):
        a = integ.step(np.zeros(2), 100.0, 1e-3)
    b = Integrator(P).step(np.zeros(2), P.U, 1e-3)
    assert np.array_equal(a, b)
    assert integ.saturations == 1
    assert "saturated" in caplog.text


def test_nonfinite_state():
    with pytest.raises(NonFiniteState):
        step(np.array([np.nan, 0.0]), 0.0, 1e-3, P)
    with pytest.raises(ValueError):
        step(np.zeros(2), 0.0, 0.0, P)


def test_reversible_unforced():
    x0 = np.array([0.2, -0.1])
    integ = Integrator(P)
    x = x0
    for _ in range(100):
        x = integ.step(x, 0.0, 1e-3)
    x = np.array([x[0], -x[1]])
    for _ in range(100):
        x = integ.step(x, 0.0, 1e-3)
    assert np.allclose([x[0], -x[1]], x0, atol=1e-10)


def test_lipschitz_constants():
    lc = lipschitz_constants(P)
    assert (lc.L_f, lc.L_g, lc.G) == (9.81, 0.0, 1.0)
    assert lipschitz_constants(PendulumParams(m=2.0)).G == 0.5
    assert lipschitz_constants(PendulumParams(theta_max=0.1)).L_f == lc.L_f
    rng = np.random.default_rng(0)
    for _ in range(1000):
        a = rng.uniform([-P.theta_max, -P.omega_max], [P.theta_max, P.omega_max])
        b = rng.uniform([-P.theta_max, -P.omega_max], [P.theta_max, P.omega_max])
        fa, _ = drift_and_actuation(a, P)
        fb, _ = drift_and_actuation(b, P)
        assert np.linalg.norm(fa - fb) <= lc.L_f * np.linalg.norm(a - b) + 1e-12


def test_max_rate_bounds_vector_field():
    D = max_rate(P)
    rng = np.random.default_rng(1)
    for _ in range(2000):
        x = rng.uniform([-P.theta_max, -P.omega_max], [P.theta_max, P.omega_max])
        u = rng.uniform(-P.U, P.U)
        f, g = drift_and_actuation(x, P)
        assert np.linalg.norm(f + g * u) <= D + 1e-12


def test_params_validated():
    with pytest.raises(ValueError):
        PendulumParams(m=0.0)
    with pytest.raises(ValueError):
        PendulumParams(U=float("inf"))
