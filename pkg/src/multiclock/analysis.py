"""Closed-form parameter constraints and simulation-side bound checks.

The constraint chain relates sensor noise, freshness, synchronization
slack and tracking accuracy so that the four component contracts compose
into the system-level stability contract.  Each inequality is evaluated
as ``lhs <= rhs`` (or ``<`` for the containment check) and reported
with its slack.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


class MissingParameter(KeyError):
    pass


class InfeasibleParameters(ValueError):
    def __init__(self, report: "ConstraintReport"):
        names = ", ".join(c.id for c in report.violated)
        super().__init__(f"parameter constraints violated: {names}")
        self.report = report


class NegativeFloorArg(UserWarning):
    """The synchronization floor is taken of a negative number."""


@dataclass
class ParameterSet:
    # timing (seconds)
    T_min_m: float
    T_max_m: float
    T_avg_m: float
    T_fresh_m: float
    T_min_l: float
    T_max_l: float
    T_avg_l: float
    T_fresh_l: float
    # distances in state space
    delta_A_init: float
    delta_G_init: float
    delta_sensor_MPC: float
    delta_sensor_Est: float
    delta_dynamics_MPC: float
    delta_dynamics_FL: float
    delta_tracking_FL: float
    delta_progress_MPC: float
    # rates
    D_x: float
    D_d: float
    # tracker envelope and plant constants
    M: float
    lam: float
    U: float
    G: float
    L_f: float
    L_g: float
    A_cl_norm: float
    delta_w: float
    E_radius: float  # smallest half-width of the invariant set

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise ValueError(f"{f.name} must be a nonnegative number, got {v!r}")
        for c in ("m", "l"):
            lo, avg, hi = (getattr(self, f"T_{k}_{c}") for k in ("min", "avg", "max"))
            if not lo <= avg <= hi:
                raise ValueError(f"need T_min <= T_avg <= T_max on clock {c}")

    @classmethod
    def from_dict(cls, doc: dict) -> "ParameterSet":
        names = [f.name for f in fields(cls)]
        missing = [n for n in names if n not in doc]
        if missing:
            raise MissingParameter(", ".join(missing))
        unknown = set(doc) - set(names)
        if unknown:
            raise ValueError(f"unknown parameters: {', '.join(sorted(unknown))}")
        return cls(**{n: float(doc[n]) for n in names})

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **changes) -> "ParameterSet":
        d = self.to_dict()
        d.update(changes)
        return ParameterSet(**d)

    def dumps(self) -> str:
        lines = ["[params]"]
        lines += [f"{k} = {v!r}" for k, v in self.to_dict().items()]
        return "\n".join(lines) + "\n"

    def bindings(self) -> dict:
        """Values for the parameter names used in contract formulas."""
        return self.to_dict()


def load_params(path) -> ParameterSet:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    return ParameterSet.from_dict(doc.get("params", doc))


def save_params(p: ParameterSet, path) -> None:
    Path(path).write_text(p.dumps())


@dataclass(frozen=True)
class Constraint:
    id: str
    description: str
    lhs: float
    rhs: float
    strict: bool = False

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def ok(self) -> bool:
        return self.slack > 0 if self.strict else self.slack >= -1e-12

    @property
    def status(self) -> str:
        return "ok" if self.ok else "violated"


@dataclass
class ConstraintReport:
    constraints: list

    @property
    def feasible(self) -> bool:
        return all(c.ok for c in self.constraints)

    @property
    def violated(self) -> list:
        return [c for c in self.constraints if not c.ok]

    def __getitem__(self, cid: str) -> Constraint:
        for c in self.constraints:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def to_text(self) -> str:
        out = []
        for c in self.constraints:
            op = "<" if c.strict else "<="
            out.append(f"{c.id:22s} {c.lhs:12.6g} {op:2s} {c.rhs:12.6g}  slack {c.slack:+.6g}  {c.status}")
        out.append(f"feasible: {'yes' if self.feasible else 'no'}")
        return "\n".join(out) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "lhs", "rhs", "slack", "status"])
        for c in self.constraints:
            w.writerow([c.id, repr(c.lhs), repr(c.rhs), repr(c.slack), c.status])
        return buf.getvalue()


def delta_T_m(p: ParameterSet) -> float:
    """Worst physical-time gap between planner ticks as seen through the tracker."""
    if p.T_max_l <= 0:
        raise ValueError("T_max_l must be positive")
    arg = p.T_min_m - (p.T_fresh_m + p.T_fresh_l)
    if arg < 0:
        warnings.warn(f"floor argument is negative ({arg:.6g})", NegativeFloorArg, stacklevel=2)
    # round before flooring so exact multiples are not lost to representation error
    ratio = round(arg / p.T_max_l, 9)
    return p.T_max_m - p.T_avg_l * math.floor(ratio)


CONSTRAINT_IDS = (
    "sensor_chain",
    "initial_dynamics",
    "inductive_dynamics",
    "progress",
    "tracking_gate",
    "invariant_containment",
)


def check_constraints(p: ParameterSet) -> ConstraintReport:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NegativeFloorArg)
        dT = delta_T_m(p)
    fresh = p.T_fresh_m + p.T_fresh_l
    cs = [
        Constraint(
            "sensor_chain", "estimator noise plus staleness within planner sensing bound",
            p.delta_sensor_Est + p.T_fresh_m * p.D_x, p.delta_sensor_MPC),
        Constraint(
            "initial_dynamics", "first trajectory starts close to the state",
            p.delta_G_init + p.delta_A_init + p.D_x * p.T_fresh_l, p.delta_dynamics_FL),
        Constraint(
            "inductive_dynamics", "later trajectories start close to the state",
            p.delta_tracking_FL + p.delta_dynamics_MPC + fresh * p.D_x + p.D_d * dT,
            p.delta_dynamics_FL),
        Constraint(
            "progress", "tracker start error within planner progress margin",
            p.delta_dynamics_FL, p.delta_progress_MPC),
        Constraint(
            "tracking_gate", "envelope contracts the start error below the tracking bound",
            p.delta_dynamics_FL * p.M * math.exp(-p.lam * p.T_min_l) + p.T_max_l * p.delta_w,
            p.delta_tracking_FL),
        Constraint(
            "invariant_containment", "tracking bound inside the invariant set",
            p.delta_tracking_FL, p.E_radius, strict=True),
    ]
    return ConstraintReport(cs)


def rho(t: float, U: float, G: float, L_f: float, L_g: float) -> float:
    return U * G * t * math.exp((L_f + L_g * U) * t)


def compute_delta_w(p: ParameterSet, plant=None) -> float:
    """Bound on the ZOH disturbance accumulated over one tracker period.

    ``plant`` (PendulumParams) overrides U, G, L_f, L_g when given.
    """
    U, G, L_f, L_g = p.U, p.G, p.L_f, p.L_g
    if plant is not None:
        from .plant import lipschitz_constants

        lc = lipschitz_constants(plant)
        U, G, L_f, L_g = plant.U, lc.G, lc.L_f, lc.L_g
    T = p.T_max_l
    return T * ((L_f + 2 * L_g * U + p.A_cl_norm) * rho(T, U, G, L_f, L_g) + G * U)


def system_contract_summary(p: ParameterSet, check: tuple = CONSTRAINT_IDS[:4]):
    """Top-level stability contract, emitted only if the listed checks hold."""
    from .contracts import Contract
    from .mcl import parse

    report = check_constraints(p)
    sub = ConstraintReport([report[c] for c in check])
    if not sub.feasible:
        raise InfeasibleParameters(sub)
    bad_fl = [c.id for c in report.violated]
    notes = [f"discharged {c.id}: slack {c.slack:.6g}" for c in sub.constraints]
    if bad_fl:
        notes.append("not discharged: " + ", ".join(bad_fl))
    assume = parse(
        "(@m. Close(x, x_i; delta_A_init)) && (@m. G BoundedVariation(x; D_x))"
    )
    guarantee = parse("@l. F G Cost(x)")
    params = {k: v for k, v in p.to_dict().items() if k in ("delta_A_init", "D_x")}
    return Contract("system", assume, guarantee, params=params, notes=notes)


def derive_parameters(sc, deltas: dict) -> ParameterSet:
    """Fill the plant- and controller-derived constants from a scenario.

    ``deltas`` supplies the freshness bounds and the designer-chosen
    distance bounds; everything else is computed.
    """
    from .controllers import gains_to_envelope
    from .plant import lipschitz_constants, max_rate

    plant = sc.plant
    lc = lipschitz_constants(plant)
    env = gains_to_envelope(sc.gains)
    rate = max_rate(plant)
    base = dict(
        T_min_m=sc.clock_m.T_min, T_max_m=sc.clock_m.T_max, T_avg_m=sc.clock_m.T_avg,
        T_min_l=sc.clock_l.T_min, T_max_l=sc.clock_l.T_max, T_avg_l=sc.clock_l.T_avg,
        D_x=rate, D_d=rate, M=env.M, lam=env.lam, U=plant.U, G=lc.G, L_f=lc.L_f, L_g=lc.L_g,
        A_cl_norm=float(np.linalg.norm(sc.gains.A_cl, 2)),
        E_radius=float(min(sc.cost_radii)), delta_w=0.0,
    )
    base.update(deltas)
    p = ParameterSet.from_dict(base)
    return p.replace(delta_w=compute_delta_w(p))


# simulation-side checks


def _segment_inputs(beh, i: int):
    """Trajectory, trajectory time and grid index in force at l tick ``i``."""
    j = beh.tau("l", "m", i)
    if j < 0:
        return None
    traj = beh.value("xd", j)
    upd = int(beh.traces["l"].columns["upd"][i])
    return traj, upd, beh.tau("l", "r", i)


@dataclass
class BoundCheck:
    checked: int
    violations: int
    worst_ratio: float

    @property
    def ok(self) -> bool:
        return self.violations == 0


def zoh_gronwall_check(sc, beh, p: Optional[ParameterSet] = None) -> BoundCheck:
    """Held vs continuously recomputed torque over every tracker interval.

    For each l interval the continuous-control plant is restarted from
    the recorded state and compared against the recorded (held-input)
    trajectory at every grid point of the interval.
    """
    from .executive import reference_segment
    from .plant import lipschitz_constants

    lc = lipschitz_constants(sc.plant)
    U = sc.plant.U
    T_l = sc.clock_l.T_avg
    h = beh.h
    xs = np.asarray(beh.traces["r"].columns["x"])
    n_l = beh.length("l")
    checked = violations = 0
    worst = 0.0
    for i in range(n_l - 1):
        seg = _segment_inputs(beh, i)
        if seg is None:
            continue
        traj, upd, k0 = seg
        k1 = beh.tau("l", "r", i + 1)
        ref = reference_segment(sc, xs[k0], traj, T_l * (i - upd), k1 - k0)
        for n in range(1, k1 - k0 + 1):
            t = n * h
            bound = U * lc.G * t * t * math.exp((lc.L_f + lc.L_g * U) * t)
            dev = float(np.linalg.norm(xs[k0 + n] - ref[n]))
            checked += 1
            worst = max(worst, dev / bound)
            if dev > bound:
                violations += 1
    return BoundCheck(checked, violations, worst)


def tracking_envelope_check(sc, beh, p: ParameterSet) -> BoundCheck:
    """||e|| <= ||e(0)|| M exp(-lam s) + T_max_l delta_w at each l tick of a segment."""
    T_l = sc.clock_l.T_avg
    xs = beh.traces["r"].columns["x"]
    checked = violations = 0
    worst = 0.0
    start_err = None
    for i in range(beh.length("l")):
        seg = _segment_inputs(beh, i)
        if seg is None:
            continue
        traj, upd, k = seg
        s = T_l * (i - upd)
        if traj.expired(s):
            continue
        e = float(np.linalg.norm(np.asarray(xs[k]) - traj.state(s)))
        if i == upd or start_err is None:
            start_err = float(np.linalg.norm(np.asarray(xs[beh.tau("l", "r", upd)]) - traj.state(0.0)))
        bound = start_err * p.M * math.exp(-p.lam * s) + p.T_max_l * p.delta_w
        checked += 1
        if bound > 0:
            worst = max(worst, e / bound)
        if e > bound + 1e-12:
            violations += 1
    return BoundCheck(checked, violations, worst)


@dataclass
class ProgressMargin:
    steps: int
    min_decrease: float
    q: float

    @property
    def ok(self) -> bool:
        return self.steps == 0 or self.min_decrease > self.q


def progress_margin_check(sc, beh) -> ProgressMargin:
    """Smallest planner value decrease between consecutive m ticks, against the cost quantum.

    Only steps whose earlier plan starts outside the zero-cost box count.
    If the decrease falls below ``q`` the quantized cost may stall and the
    progress atom can read False on a correct controller.
    """
    from .controllers import MPC

    mpc = MPC(sc.mpc, sc.plant)
    cf = sc.cost_function(mpc)
    starts = [t.state(0.0) for t in beh.traces["m"].columns["xd"]]
    vals = [mpc.value(s) for s in starts]
    drops = [vals[k] - vals[k + 1] for k in range(len(vals) - 1)
             if not cf.inside(starts[k]) and math.isfinite(vals[k])]
    return ProgressMargin(len(drops), min(drops) if drops else math.inf, sc.cost_q)
