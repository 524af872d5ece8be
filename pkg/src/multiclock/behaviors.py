"""Recorded multiclock executions.

A behavior holds one valuation trace per clock plus the sampled
synchronization maps between every ordered pair of clocks.  Reads go
through ``tau`` exactly as the local semantics prescribe: a variable
clocked by ``d`` is observed from ``c`` at tick ``t`` as the value at
``tau_c^d(t)``.

Shifted executions are cheap views: a view stores, per source clock,
how many ticks its outgoing maps have been advanced.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping

import numpy as np


class BehaviorError(Exception):
    pass


class OutOfTrace(BehaviorError):
    """A read landed outside the recorded ticks."""


class UnknownVariable(BehaviorError):
    pass


class UnknownClock(BehaviorError):
    pass


class MissingSyncMap(BehaviorError):
    pass


class ClockKind(str, Enum):
    DISCRETE = "discrete"
    PHYSICAL = "physical"


SHAPES = ("scalar", "integer", "vector", "trajectory")


@dataclass(frozen=True)
class ClockId:
    name: str
    kind: ClockKind = ClockKind.DISCRETE

    @property
    def physical(self) -> bool:
        return self.kind is ClockKind.PHYSICAL


@dataclass(frozen=True)
class VariableDecl:
    name: str
    clock: str
    shape: str = "scalar"
    size: int = 1

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown value shape {self.shape!r}")


@dataclass
class ClockTrace:
    """Column-oriented tick records of one clock."""

    clock: str
    length: int
    columns: dict[str, list] = field(default_factory=dict)

    def tick(self, index: int) -> dict[str, Any]:
        if not 0 <= index < self.length:
            raise OutOfTrace(f"{self.clock} tick {index} outside [0, {self.length})")
        return {"index": index, "valuations": {k: v[index] for k, v in self.columns.items()}}


@dataclass
class SyncMap:
    source: str
    target: str
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.int64)

    def __call__(self, tick: int) -> int:
        if not 0 <= tick < len(self.samples):
            raise OutOfTrace(f"tau_{self.source}^{self.target}({tick}) not recorded")
        return int(self.samples[tick])


class SystemBehavior:
    """One finite recorded execution.

    ``h`` is the grid step of the physical clock; physical tick ``k``
    happens at ``k * h`` seconds.
    """

    def __init__(
        self,
        clocks: Iterable[ClockId],
        variables: Iterable[VariableDecl],
        traces: Mapping[str, ClockTrace],
        syncs: Mapping[tuple[str, str], SyncMap],
        h: float = 1e-3,
    ):
        self.clocks = {c.name: c for c in clocks}
        self.variables = {v.name: v for v in variables}
        self.traces = dict(traces)
        self.syncs = dict(syncs)
        self.h = float(h)
        physical = [c for c in self.clocks.values() if c.physical]
        if len(physical) != 1:
            raise BehaviorError("a behavior needs exactly one physical clock")
        self.physical = physical[0].name
        for v in self.variables.values():
            if v.clock not in self.clocks:
                raise UnknownClock(f"variable {v.name} clocked by unknown {v.clock}")
        for name in self.clocks:
            if name not in self.traces:
                self.traces[name] = ClockTrace(name, 0)

    @property
    def base(self) -> "SystemBehavior":
        return self

    @property
    def shifts(self) -> Mapping[str, int]:
        return {}

    def length(self, clock: str) -> int:
        return self.traces[self._clock(clock)].length

    def _clock(self, name: str) -> str:
        if name not in self.clocks:
            raise UnknownClock(name)
        return name

    def tau(self, source: str, target: str, tick: int) -> int:
        """Raw map value; identity maps are checked against the source range."""
        if not 0 <= tick < self.length(source):
            raise OutOfTrace(f"{source} tick {tick} not recorded")
        if source == target:
            return tick
        try:
            sync = self.syncs[(source, target)]
        except KeyError:
            raise MissingSyncMap(f"no synchronization map {source}->{target}") from None
        return sync(tick)

    def value(self, var: str, tick: int):
        decl = self.variables.get(var)
        if decl is None:
            raise UnknownVariable(var)
        trace = self.traces[decl.clock]
        if not 0 <= tick < trace.length:
            raise OutOfTrace(f"{var} at {decl.clock} tick {tick}")
        return trace.columns[var][tick]

    def time_of(self, clock: str, tick: int) -> float:
        """Physical instant of a recorded tick."""
        return self.tau(clock, self.physical, tick) * self.h


class BehaviorView:
    """A shifted execution: outgoing maps of some clocks advanced."""

    def __init__(self, base: SystemBehavior, shifts: Mapping[str, int]):
        self.base = base
        self.shifts = {k: v for k, v in shifts.items() if v}

    def __getattr__(self, name):
        return getattr(self.base, name)


def _source_tick(beh, observer: str, tick: int) -> int:
    return tick + beh.shifts.get(observer, 0)


def _map(beh, source: str, target: str, tick: int) -> int:
    return beh.base.tau(source, target, _source_tick(beh, source, tick))


def read_variable(beh, observer: str, var: str, offset: int = 0):
    """Value of ``var`` seen from ``observer`` at tick ``offset`` of the view."""
    base = beh.base
    decl = base.variables.get(var)
    if decl is None:
        raise UnknownVariable(var)
    base._clock(observer)
    return base.value(var, _map(beh, observer, decl.clock, offset))


def read_clock(beh, observer: str, target: str, offset: int = 0):
    """``tau_observer^target`` at ``offset``; seconds for the physical clock."""
    base = beh.base
    base._clock(observer)
    base._clock(target)
    idx = _map(beh, observer, target, offset)
    if base.clocks[target].physical:
        return idx * base.h
    return idx


def read_clock_pair(beh, observer: str, mid: str, target: str, offset: int = 0):
    """``tau_mid^target(tau_observer^mid(offset))``."""
    if mid == observer:
        raise ValueError(f"clock pair {mid}^{target} read at its own clock")
    base = beh.base
    for c in (observer, mid, target):
        base._clock(c)
    first = _map(beh, observer, mid, offset)
    idx = _map(beh, mid, target, first)
    if base.clocks[target].physical:
        return idx * base.h
    return idx


def shift_execution(beh, clock: str, t: int):
    """The (clock, t)-execution of ``beh`` as a lightweight view."""
    if t < 0:
        raise ValueError("shift must be nonnegative")
    beh.base._clock(clock)
    shifts = dict(beh.shifts)
    shifts[clock] = shifts.get(clock, 0) + t
    return BehaviorView(beh.base, shifts)


def check_sync_maps(beh: SystemBehavior) -> list[str]:
    """Monotonicity and causality problems of the recorded maps."""
    problems = []
    for (c, d), sync in sorted(beh.syncs.items()):
        s = sync.samples
        if len(s) != beh.length(c):
            problems.append(f"{c}->{d}: {len(s)} samples for {beh.length(c)} ticks")
            continue
        if len(s) > 1 and np.any(np.diff(s) < 0):
            problems.append(f"{c}->{d}: not monotone")
        if d == beh.physical or c == beh.physical:
            continue
        for i, j in enumerate(s):
            if j >= 0 and beh.time_of(d, int(j)) > beh.time_of(c, i) + 1e-12:
                problems.append(f"{c}->{d}: tick {i} sees the future")
                break
    return problems


# Trace file codec.  Line oriented so that diffs stay readable.

MAGIC = "mctrace 1"


def _fmt(x) -> str:
    return format(float(x), ".16e")


def encode(beh: SystemBehavior) -> str:
    out = io.StringIO()
    w = out.write
    w(MAGIC + "\n")
    w(f"h {_fmt(beh.h)}\n")
    w("[clocks]\n")
    for c in sorted(beh.clocks.values(), key=lambda c: c.name):
        w(f"{c.name} {c.kind.value}\n")
    w("[variables]\n")
    for v in sorted(beh.variables.values(), key=lambda v: v.name):
        w(f"{v.name} {v.clock} {v.shape} {v.size}\n")
    trajectories = []
    for name in sorted(beh.clocks):
        trace = beh.traces[name]
        decls = sorted(
            (v for v in beh.variables.values() if v.clock == name), key=lambda v: v.name
        )
        w(f"[ticks.{name}]\n")
        w(f"count {trace.length}\n")
        w("columns " + " ".join(v.name for v in decls) + "\n")
        for i in range(trace.length):
            cells = []
            for v in decls:
                val = trace.columns[v.name][i]
                if v.shape == "trajectory":
                    if val is None:
                        cells.append("-")
                    else:
                        cells.append(f"#{len(trajectories)}")
                        trajectories.append(val)
                elif v.shape == "integer":
                    cells.append(str(int(val)))
                elif v.shape == "vector":
                    cells.append(",".join(_fmt(x) for x in np.ravel(val)))
                else:
                    cells.append(_fmt(val))
            w(" ".join(cells) + "\n")
    for c, d in sorted(beh.syncs):
        w(f"[sync.{c}.{d}]\n")
        w(" ".join(str(int(x)) for x in beh.syncs[(c, d)].samples) + "\n")
    for k, traj in enumerate(trajectories):
        w(f"[traj.{k}]\n")
        w(f"dt {_fmt(traj.dt)}\n")
        for row in traj.ctrl:
            w(" ".join(_fmt(x) for x in row) + "\n")
    return out.getvalue()


def _sections(text: str):
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise BehaviorError("not a multiclock trace (missing header)")
    header, sections, current = [], {}, None
    for line in lines[1:]:
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = []
        elif current is None:
            header.append(line)
        else:
            sections[current].append(line)
    return header, sections


def decode(text: str) -> SystemBehavior:
    from .controllers.trajectory import Trajectory

    header, sec = _sections(text)
    h = 1e-3
    for line in header:
        key, _, val = line.partition(" ")
        if key == "h":
            h = float(val)
    clocks = []
    for line in sec.get("clocks", []):
        name, kind = line.split()
        clocks.append(ClockId(name, ClockKind(kind)))
    decls = {}
    for line in sec.get("variables", []):
        name, clock, shape, size = line.split()
        decls[name] = VariableDecl(name, clock, shape, int(size))
    trajs = {}
    for key, body in sec.items():
        if key.startswith("traj."):
            dt = float(body[0].split()[1])
            ctrl = np.array([[float(x) for x in row.split()] for row in body[1:]])
            trajs[int(key[5:])] = Trajectory(dt, ctrl.reshape(-1, 4))
    traces = {}
    for c in clocks:
        body = sec.get(f"ticks.{c.name}", ["count 0", "columns"])
        count = int(body[0].split()[1])
        names = body[1].split()[1:]
        cols = {n: [] for n in names}
        for row in body[2 : 2 + count]:
            cells = row.split(" ") if names else []
            for n, cell in zip(names, cells):
                shape = decls[n].shape
                if shape == "trajectory":
                    cols[n].append(None if cell == "-" else trajs[int(cell[1:])])
                elif shape == "integer":
                    cols[n].append(int(cell))
                elif shape == "vector":
                    cols[n].append(np.array([float(x) for x in cell.split(",")]))
                else:
                    cols[n].append(float(cell))
        traces[c.name] = ClockTrace(c.name, count, cols)
    syncs = {}
    for key, body in sec.items():
        if key.startswith("sync."):
            _, c, d = key.split(".")
            vals = body[0].split() if body else []
            syncs[(c, d)] = SyncMap(c, d, np.array([int(x) for x in vals], dtype=np.int64))
    return SystemBehavior(clocks, decls.values(), traces, syncs, h)


def save(beh: SystemBehavior, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(encode(beh))


def load(path) -> SystemBehavior:
    with open(path, encoding="utf-8") as fh:
        return decode(fh.read())
