"""Deterministic multiclock scheduler for the two-layer pendulum loop.

Clocks: ``r`` is the physical grid (step ``h``), ``l`` runs the estimator
and the tracker, ``m`` runs the planner.  At a grid instant where both
fire, ``l`` goes first, so an ``m`` message is never visible to an ``l``
tick at the same instant.  Synchronization maps record, per tick, the
newest tick of the other clock whose data had been delivered.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .behaviors import ClockId, ClockKind, ClockTrace, SyncMap, SystemBehavior, VariableDecl
from .controllers import MPC, Estimator, FBLGains, Infeasible, MPCConfig, Trajectory, fbl_control
from .plant import Integrator, PendulumParams, saturate

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

log = logging.getLogger(__name__)


class ScenarioInvalid(ValueError):
    pass


class SolverFailure(RuntimeError):
    """The planner failed; ``behavior`` holds the execution up to that point."""

    def __init__(self, tick: int, time: float, behavior: SystemBehavior, cause=None):
        super().__init__(f"planner infeasible at m tick {tick} (t = {time:.3f} s)")
        self.tick = tick
        self.time = time
        self.behavior = behavior
        self.cause = cause


@dataclass(frozen=True)
class ClockConfig:
    T_avg: float
    T_min: float
    T_max: float
    jitter: str = "none"  # or 'uniform'

    def __post_init__(self):
        if not 0 < self.T_min <= self.T_avg <= self.T_max:
            raise ScenarioInvalid(f"need 0 < T_min <= T_avg <= T_max, got {self}")
        if self.jitter not in ("none", "uniform"):
            raise ScenarioInvalid(f"unknown jitter model {self.jitter!r}")


@dataclass(frozen=True)
class NetworkConfig:
    delay_ml: float = 0.0  # trajectory delivery, m -> l
    delay_lm: float = 0.0  # estimate delivery, l -> m
    jitter_ml: float = 0.0  # extra uniform delay in [0, jitter]
    jitter_lm: float = 0.0

    def __post_init__(self):
        if min(self.delay_ml, self.delay_lm, self.jitter_ml, self.jitter_lm) < 0:
            raise ScenarioInvalid("delays must be nonnegative")


@dataclass
class Scenario:
    plant: PendulumParams = field(default_factory=PendulumParams)
    gains: FBLGains = field(default_factory=lambda: FBLGains(25.0, 10.0))
    mpc: MPCConfig = field(default_factory=MPCConfig)
    clock_m: ClockConfig = field(default_factory=lambda: ClockConfig(0.05, 0.048, 0.052, "uniform"))
    clock_l: ClockConfig = field(default_factory=lambda: ClockConfig(0.002, 0.002, 0.002))
    network: NetworkConfig = field(default_factory=NetworkConfig)
    h: float = 1e-3
    duration: float = 10.0
    x_i: tuple = (0.6, 0.0)
    init_perturbation: float = 0.0
    sensor_noise: float = 0.002
    cost_radii: tuple = (4.0, 7.2)
    cost_q: float = 1e-2
    seed: int = 0
    on_infeasible: str = "raise"  # or 'hold': keep the last trajectory, send nothing
    params: Optional[object] = None  # analysis.ParameterSet
    name: str = "scenario"

    def validate(self) -> None:
        if self.h <= 0 or self.duration <= 0:
            raise ScenarioInvalid("h and duration must be positive")
        for label, c in (("m", self.clock_m), ("l", self.clock_l)):
            ratio = c.T_avg / self.h
            if abs(ratio - round(ratio)) > 1e-6 or round(ratio) < 1:
                raise ScenarioInvalid(f"grid step does not divide the {label} period")
            if math.floor(c.T_max / self.h + 1e-9) < math.ceil(c.T_min / self.h - 1e-9):
                raise ScenarioInvalid(f"no grid period inside the {label} bounds")
        if self.duration < 3 * self.mpc.T - 1e-12:
            raise ScenarioInvalid("duration must cover at least three planning horizons")
        if self.mpc.dt < self.h - 1e-12:
            raise ScenarioInvalid("planner step shorter than the grid step")
        if self.on_infeasible not in ("raise", "hold"):
            raise ScenarioInvalid(f"unknown planner failure policy {self.on_infeasible!r}")
        if self.init_perturbation < 0 or self.sensor_noise < 0:
            raise ScenarioInvalid("noise bounds must be nonnegative")

    def with_delay(self, delay_ml: float) -> "Scenario":
        return replace(self, network=replace(self.network, delay_ml=delay_ml))

    def cost_function(self, mpc: Optional[MPC] = None):
        from .predicates import CostFunction

        mpc = mpc or MPC(self.mpc, self.plant)
        return CostFunction(np.zeros(2), np.array(self.cost_radii), self.cost_q, mpc.value)

    def registry(self, mpc: Optional[MPC] = None):
        from .predicates import Limits, default_registry

        p = self.plant
        limits = Limits(p.theta_max, p.omega_max, p.U, p.m, p.L, p.g)
        return default_registry(limits, self.cost_function(mpc), self.h)


# scenario files


def _section(doc, *keys):
    node = doc
    for k in keys:
        node = node.get(k, {})
    return node


def scenario_from_dict(doc: dict, base: Optional[Path] = None) -> Scenario:
    from .analysis import ParameterSet, load_params

    sc = Scenario()
    plant = PendulumParams(**_section(doc, "plant"))
    fbl = _section(doc, "fbl")
    gains = FBLGains(*fbl.get("K", (sc.gains.K1, sc.gains.K2)))
    mpc_doc = dict(_section(doc, "mpc"))
    for key in ("Q", "box", "init_radius"):
        if key in mpc_doc:
            mpc_doc[key] = tuple(mpc_doc[key])
    mpc = MPCConfig(**mpc_doc)
    cm = ClockConfig(**_section(doc, "clock", "m")) if _section(doc, "clock", "m") else sc.clock_m
    cl = ClockConfig(**_section(doc, "clock", "l")) if _section(doc, "clock", "l") else sc.clock_l
    net = NetworkConfig(**_section(doc, "network"))
    run = dict(_section(doc, "run"))
    for key in ("x_i", "cost_radii"):
        if key in run:
            run[key] = tuple(run[key])
    params = None
    pdoc = doc.get("params")
    if isinstance(pdoc, str):
        path = Path(pdoc)
        if base is not None and not path.is_absolute():
            path = base / path
        params = load_params(path)
    elif isinstance(pdoc, dict):
        params = ParameterSet.from_dict(pdoc)
    return Scenario(plant=plant, gains=gains, mpc=mpc, clock_m=cm, clock_l=cl, network=net,
                    params=params, **run)


def load_scenario(path) -> Scenario:
    path = Path(path)
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    sc = scenario_from_dict(doc, path.parent)
    sc.validate()
    return sc


def data_path(name: str) -> Path:
    return Path(__file__).parent / "data" / name


def nominal_scenario() -> Scenario:
    return load_scenario(data_path("nominal.toml"))


def delayed_scenario(sc: Optional[Scenario] = None) -> Scenario:
    """The nominal loop with the trajectory channel delayed by 2 T_min^m."""
    sc = sc or nominal_scenario()
    out = sc.with_delay(2 * sc.clock_m.T_min)
    out.name = "delayed"
    # the planner loses feasibility once the state drifts; keep flying on the last plan
    out.on_infeasible = "hold"
    return out


# the loop


def _tick_schedule(c: ClockConfig, h: float, K: int, rng) -> list[int]:
    lo = math.ceil(c.T_min / h - 1e-9)
    hi = math.floor(c.T_max / h + 1e-9)
    nominal = int(round(c.T_avg / h))
    ticks, k = [], 0
    while k <= K:
        ticks.append(k)
        k += int(rng.integers(lo, hi + 1)) if c.jitter == "uniform" else nominal
    return ticks


def _delays(n: int, base: float, jitter: float, h: float, rng) -> np.ndarray:
    d = np.full(n, base)
    if jitter > 0:
        d = d + rng.uniform(0.0, jitter, n)
    return np.round(d / h).astype(np.int64)


VARIABLES = [
    VariableDecl("x", "r", "vector", 2),
    VariableDecl("u", "r", "scalar"),
    VariableDecl("ref", "r", "vector", 2),
    VariableDecl("xhat", "l", "vector", 2),
    VariableDecl("upd", "l", "integer"),
    VariableDecl("expired", "l", "integer"),
    VariableDecl("xd", "m", "trajectory"),
    VariableDecl("V", "m", "scalar"),
    VariableDecl("kkt", "m", "scalar"),
]
CLOCKS = [ClockId("m"), ClockId("l"), ClockId("r", ClockKind.PHYSICAL)]


class _Recorder:
    def __init__(self):
        self.cols = {c.name: {v.name: [] for v in VARIABLES if v.clock == c.name} for c in CLOCKS}
        self.maps = {(c, d): [] for c in "mlr" for d in "mlr" if c != d}

    def behavior(self, h: float, info: dict) -> SystemBehavior:
        n_m = len(self.cols["m"]["xd"])
        n_l = len(self.cols["l"]["xhat"])
        n_r = len(self.cols["r"]["x"])
        lengths = {"m": n_m, "l": n_l, "r": n_r}
        traces = {c: ClockTrace(c, lengths[c], cols) for c, cols in self.cols.items()}
        syncs = {
            (c, d): SyncMap(c, d, np.array(s[: lengths[c]], dtype=np.int64))
            for (c, d), s in self.maps.items()
        }
        beh = SystemBehavior(CLOCKS, VARIABLES, traces, syncs, h)
        beh.info = info
        return beh


def _simulate(sc: Scenario, continuous: bool) -> SystemBehavior:
    sc.validate()
    h = sc.h
    K = int(round(sc.duration / h))
    seeds = np.random.SeedSequence(sc.seed).spawn(5)
    rng_m, rng_l, rng_net, rng_noise, rng_init = (np.random.default_rng(s) for s in seeds)
    l_ticks = _tick_schedule(sc.clock_l, h, K, rng_l)
    m_ticks = _tick_schedule(sc.clock_m, h, K, rng_m)
    l_at = {g: i for i, g in enumerate(l_ticks)}
    m_at = {g: j for j, g in enumerate(m_ticks)}
    d_ml = _delays(len(m_ticks), sc.network.delay_ml, sc.network.jitter_ml, h, rng_net)
    d_lm = _delays(len(l_ticks), sc.network.delay_lm, sc.network.jitter_lm, h, rng_net)
    # no reordering: arrival instants are made monotone
    arrive_ml = np.maximum.accumulate(np.array(m_ticks) + d_ml)
    arrive_lm = np.maximum.accumulate(np.array(l_ticks) + d_lm)

    plant = sc.plant
    integ = Integrator(plant)
    est = Estimator(sc.sensor_noise, int(rng_noise.integers(2**32)))
    mpc = MPC(sc.mpc, plant)
    x = np.array(sc.x_i, dtype=float)
    if sc.init_perturbation > 0:
        r = sc.init_perturbation * math.sqrt(rng_init.uniform())
        a = rng_init.uniform(0, 2 * math.pi)
        x = x + np.array([r * math.cos(a), r * math.sin(a)])

    rec = _Recorder()
    trajs = []
    xhats = []
    info = {"saturations": 0, "expired": 0, "scenario": sc.name, "continuous": continuous}
    u = 0.0
    seen_m = -1  # tau_l^m at the latest l tick
    upd = 0
    i = -1  # latest l tick
    j = -1  # latest m tick
    ml_ptr = 0  # next m tick not yet delivered
    sent = []  # whether m tick j emitted a trajectory
    lm_ptr = 0  # next l estimate not yet visible to m
    failure = None
    nan2 = np.array([np.nan, np.nan])
    ref = nan2
    gains = sc.gains
    T_l = sc.clock_l.T_avg

    def control(s: float) -> float:
        nonlocal ref
        traj = trajs[seen_m]
        cmd, expired = fbl_control(x, traj, s, gains, plant)
        ref = traj.state(s)
        if expired:
            info["expired"] += 1
        val, hit = saturate(cmd, plant)
        if hit:
            info["saturations"] += 1
        return val

    for k in range(K + 1):
        if k in l_at:
            i = l_at[k]
            new_m = seen_m
            while ml_ptr <= j and arrive_ml[ml_ptr] <= k and m_ticks[ml_ptr] < k:
                if sent[ml_ptr]:
                    new_m = ml_ptr
                ml_ptr += 1
            if new_m != seen_m and new_m >= 0:
                upd = i
            seen_m = new_m
            xh = est(x)
            xhats.append(xh)
            expired = 0
            if seen_m >= 0:
                s = T_l * (i - upd)
                expired = int(trajs[seen_m].expired(s))
                u = control(s)
            else:
                u = 0.0
            cols = rec.cols["l"]
            cols["xhat"].append(xh)
            cols["upd"].append(upd)
            cols["expired"].append(expired)
            rec.maps[("l", "m")].append(seen_m)
            rec.maps[("l", "r")].append(k)
        elif continuous and seen_m >= 0:
            u = control(T_l * (i - upd) + (k - l_ticks[i]) * h)
        if k in m_at:
            j_new = m_at[k]
            while lm_ptr < len(l_ticks) and lm_ptr <= i and arrive_lm[lm_ptr] <= k:
                lm_ptr += 1
            seen_l = lm_ptr - 1
            xh = xhats[seen_l] if seen_l >= 0 else np.array(sc.x_i, dtype=float)
            try:
                sol = mpc.solve(xh)
                traj, V, kkt = sol.trajectory, sol.cost, sol.kkt
            except Infeasible as err:
                if sc.on_infeasible == "raise":
                    failure = (j_new, k, err)
                else:
                    info["planner_failures"] = info.get("planner_failures", 0) + 1
                    traj = trajs[-1] if trajs else Trajectory.constant(xh[0], sc.mpc.dt, sc.mpc.N)
                    V, kkt = math.inf, math.nan
            if failure is None:
                j = j_new
                sent.append(math.isfinite(V))
                trajs.append(traj)
                cols = rec.cols["m"]
                cols["xd"].append(traj)
                cols["V"].append(V)
                cols["kkt"].append(kkt)
                rec.maps[("m", "l")].append(seen_l)
                rec.maps[("m", "r")].append(k)
        cols = rec.cols["r"]
        cols["x"].append(x.copy())
        cols["u"].append(u)
        cols["ref"].append(ref.copy())
        rec.maps[("r", "l")].append(i)
        rec.maps[("r", "m")].append(j)
        if failure is not None:
            break
        if k < K:
            x = integ.step(x, u, h)
    info["saturations"] += integ.saturations
    beh = rec.behavior(h, info)
    if failure is not None:
        tick, k, err = failure
        info["failure"] = {"m_tick": tick, "time": k * h, "message": str(err)}
        raise SolverFailure(tick, k * h, beh, err)
    return beh


def run(sc: Scenario) -> SystemBehavior:
    """Simulate with zero-order-held torques between l ticks."""
    return _simulate(sc, continuous=False)


def run_reference_continuous(sc: Scenario) -> SystemBehavior:
    """Same loop but the tracker recomputes its torque at every grid step."""
    return _simulate(sc, continuous=True)


def run_partial(sc: Scenario) -> tuple[SystemBehavior, Optional[SolverFailure]]:
    """Like ``run`` but returns the truncated behavior on planner failure."""
    try:
        return run(sc), None
    except SolverFailure as err:
        return err.behavior, err


def reference_segment(sc: Scenario, x0, traj, s0: float, steps: int) -> np.ndarray:
    """Continuous-control states over ``steps`` grid steps from ``x0``.

    The tracker torque is recomputed every grid step with trajectory
    time advancing from ``s0``; used as the ZOH comparison oracle.
    """
    integ = Integrator(sc.plant)
    x = np.asarray(x0, dtype=float)
    out = [x]
    for n in range(steps):
        u, _ = fbl_control(x, traj, s0 + n * sc.h, sc.gains, sc.plant)
        u, _ = saturate(u, sc.plant)
        x = integ.step(x, u, sc.h)
        out.append(x)
    return np.array(out)
