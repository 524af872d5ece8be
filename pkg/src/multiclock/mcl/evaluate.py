"""Three-valued evaluation of MCL formulas on finite recorded behaviors.

Reads that fall outside the recorded ticks make an atom Inconclusive.
Bounded modalities fold strong-Kleene over their window; unbounded ones
can only be settled by a witness (F) or a counterexample (G).  The
``horizon`` mode instead closes unbounded windows at the last recorded
tick, which is what a finite-run stability check wants.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Any, Mapping

import numpy as np

from ..behaviors import (
    BehaviorError, OutOfTrace, read_clock, read_clock_pair, read_variable,
)
from .ast import (
    Arith, BoolConst, Clock, ClockBind, ClockPair, Compare, Const, Eventually,
    GAnd, GImplies, GNot, GOr, Globally, Ite, LAnd, LImplies, LNot, LOr, Param,
    Pred, Var,
)


class BindError(Exception):
    """A name in a formula does not resolve against the behavior."""


class Verdict(Enum):
    TRUE = "true"
    FALSE = "false"
    INCONCLUSIVE = "inconclusive"

    @classmethod
    def of(cls, value) -> "Verdict":
        if isinstance(value, Verdict):
            return value
        return cls.TRUE if value else cls.FALSE

    def __invert__(self):
        if self is Verdict.TRUE:
            return Verdict.FALSE
        if self is Verdict.FALSE:
            return Verdict.TRUE
        return self

    def __and__(self, other):
        if Verdict.FALSE in (self, other):
            return Verdict.FALSE
        if Verdict.INCONCLUSIVE in (self, other):
            return Verdict.INCONCLUSIVE
        return Verdict.TRUE

    def __or__(self, other):
        if Verdict.TRUE in (self, other):
            return Verdict.TRUE
        if Verdict.INCONCLUSIVE in (self, other):
            return Verdict.INCONCLUSIVE
        return Verdict.FALSE

    def implies(self, other):
        return ~self | other

    def __bool__(self):
        raise TypeError("use `verdict is Verdict.TRUE`; a verdict is not a bool")

    def __str__(self):
        return self.value


T, F_, I = Verdict.TRUE, Verdict.FALSE, Verdict.INCONCLUSIVE

MODES = ("finite", "horizon")


class AtomContext:
    """What a named predicate may look at while being evaluated."""

    def __init__(self, ev: "LocalEvaluator", pos: int, params):
        self._ev = ev
        self.pos = pos
        self.params = params
        self.registry = ev.registry

    @property
    def behavior(self):
        return self._ev.beh

    @property
    def clock(self) -> str:
        return self._ev.clock

    def value(self, term, advance: int = 0):
        return self._ev.term(term, self.pos + advance)

    def time(self, advance: int = 0) -> float:
        beh = self._ev.beh
        return read_clock(beh, self.clock, beh.physical, self.pos + advance)


class LocalEvaluator:
    """Evaluates local formulas of one bound clock, memoized by position."""

    def __init__(self, beh, clock: str, env: Mapping[str, Any] | None = None,
                 registry=None, mode: str = "finite", tol: float = 1e-9):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if clock not in beh.clocks:
            raise BindError(f"unknown clock {clock!r}")
        if registry is None:
            from ..predicates import default_registry

            registry = default_registry()
        self.beh = beh
        self.clock = clock
        self.env = dict(env or {})
        self.registry = registry
        self.mode = mode
        self.tol = tol
        self.n = beh.length(clock) - beh.shifts.get(clock, 0)
        self._memo: dict = {}
        self._suffix: dict = {}

    # terms

    def term(self, t, pos: int):
        if isinstance(t, Const):
            return t.value
        if isinstance(t, Arith):
            a, b = self.term(t.left, pos), self.term(t.right, pos)
            if t.op == "+":
                return a + b
            if t.op == "-":
                return a - b
            return a * b
        if isinstance(t, Clock):
            return read_clock(self.beh, self.clock, t.name, pos + t.offset)
        if isinstance(t, ClockPair):
            if t.mid == self.clock:
                raise BindError(f"clock pair {t.mid}^{t.target} read at {t.mid}")
            for c in (t.mid, t.target):
                if c not in self.beh.clocks:
                    raise BindError(f"unknown clock {c!r}")
            return read_clock_pair(self.beh, self.clock, t.mid, t.target, pos + t.offset)
        if isinstance(t, Param):
            return self._param(t.name)
        if isinstance(t, Var):
            name = t.name
            if name in self.beh.clocks:
                if t.traj_arg is not None:
                    raise BindError(f"clock {name} cannot take a time argument")
                return read_clock(self.beh, self.clock, name, pos + t.offset)
            if name in self.beh.variables:
                val = read_variable(self.beh, self.clock, name, pos + t.offset)
                if t.traj_arg is None:
                    return val
                if val is None or not hasattr(val, "state"):
                    raise BindError(f"{name} is not trajectory-valued")
                return val.state(float(self.term(t.traj_arg, pos)))
            if t.offset or t.traj_arg is not None:
                raise BindError(f"unknown variable {name!r}")
            return self._param(name)
        raise TypeError(f"not a term: {t!r}")

    def _param(self, name):
        try:
            return self.env[name]
        except KeyError:
            raise BindError(f"unresolved name {name!r}") from None

    # formulas

    def eval(self, node, pos: int) -> Verdict:
        key = (id(node), pos)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        v = self._eval(node, pos)
        self._memo[key] = v
        return v

    def _eval(self, node, pos: int) -> Verdict:
        if isinstance(node, BoolConst):
            return Verdict.of(node.value)
        if isinstance(node, (Compare, Pred)):
            return self.atom(node, pos)
        if isinstance(node, LNot):
            return ~self.eval(node.body, pos)
        if isinstance(node, LAnd):
            a = self.eval(node.left, pos)
            return a if a is F_ else a & self.eval(node.right, pos)
        if isinstance(node, LOr):
            a = self.eval(node.left, pos)
            return a if a is T else a | self.eval(node.right, pos)
        if isinstance(node, LImplies):
            a = self.eval(node.left, pos)
            return T if a is F_ else a.implies(self.eval(node.right, pos))
        if isinstance(node, Ite):
            c = self.eval(node.cond, pos)
            then, other = node.then, node.orelse
            # if c then a else b  ==  (c -> a) && (!c -> b)
            if c is T:
                return self.eval(then, pos)
            if c is F_:
                return self.eval(other, pos)
            return c.implies(self.eval(then, pos)) & (~c).implies(self.eval(other, pos))
        if isinstance(node, Eventually):
            return self._window(node, pos, T)
        if isinstance(node, Globally):
            return self._window(node, pos, F_)
        raise TypeError(f"not a local formula: {node!r}")

    def _window(self, node, pos, decisive) -> Verdict:
        fold = (lambda a, b: a | b) if decisive is T else (lambda a, b: a & b)
        start = pos + node.lo
        if node.hi is not None:
            acc = ~decisive
            for q in range(start, pos + node.hi + 1):
                acc = fold(acc, self.eval(node.body, q))
                if acc is decisive:
                    break
            return acc
        if self.mode == "horizon":
            if start >= self.n:
                return ~decisive
            return self._suffix_fold(node, fold, decisive)[start]
        if start >= self.n:
            return decisive if self.eval(node.body, start) is decisive else I
        return decisive if self._suffix_fold(node, fold, decisive)[start] is decisive else I

    def _suffix_fold(self, node, fold, decisive):
        key = id(node)
        arr = self._suffix.get(key)
        if arr is None:
            arr = [None] * self.n
            acc = ~decisive
            for q in range(self.n - 1, -1, -1):
                acc = fold(acc, self.eval(node.body, q))
                arr[q] = acc
            self._suffix[key] = arr
        return arr

    def atom(self, node, pos: int) -> Verdict:
        try:
            if isinstance(node, Compare):
                return self._compare(node, pos)
            fn = self.registry.get(node.name)
            params = [self.term(p, pos) for p in node.params]
            return Verdict.of(fn(AtomContext(self, pos, params), list(node.args)))
        except OutOfTrace:
            return I
        except BehaviorError as err:
            raise BindError(str(err)) from err

    def _compare(self, node, pos: int) -> Verdict:
        a = self.term(node.left, pos)
        b = self.term(node.right, pos)
        if np.ndim(a) or np.ndim(b):
            raise BindError(f"comparison of non-scalar values in {node.op}")
        a, b = float(a), float(b)
        op = node.op
        if op == "=":
            return Verdict.of(math.isclose(a, b, rel_tol=0.0, abs_tol=self.tol))
        if op == "!=":
            return Verdict.of(not math.isclose(a, b, rel_tol=0.0, abs_tol=self.tol))
        # orderings share the equality tolerance so that negation stays exact:
        # !(a < b) is a >= b
        tol = self.tol
        if op == "<":
            return Verdict.of(a < b - tol)
        if op == "<=":
            return Verdict.of(a <= b + tol)
        if op == ">":
            return Verdict.of(a > b + tol)
        return Verdict.of(a >= b - tol)


def eval_local(phi, beh, clock: str, pos: int = 0, env=None, registry=None,
               mode: str = "finite", tol: float = 1e-9) -> Verdict:
    if pos < 0:
        raise ValueError("pos must be nonnegative")
    return LocalEvaluator(beh, clock, env, registry, mode, tol).eval(phi, pos)


def eval_global(f, beh, env=None, registry=None, mode: str = "finite",
                tol: float = 1e-9) -> Verdict:
    """Strong-Kleene evaluation of a global formula on ``beh``."""
    if isinstance(f, ClockBind):
        return eval_local(f.body, beh, f.clock, 0, env, registry, mode, tol)
    if isinstance(f, GNot):
        return ~eval_global(f.body, beh, env, registry, mode, tol)
    if isinstance(f, (GAnd, GOr, GImplies)):
        a = eval_global(f.left, beh, env, registry, mode, tol)
        if isinstance(f, GAnd) and a is F_:
            return a
        if isinstance(f, GOr) and a is T:
            return a
        if isinstance(f, GImplies) and a is F_:
            return T
        b = eval_global(f.right, beh, env, registry, mode, tol)
        if isinstance(f, GAnd):
            return a & b
        if isinstance(f, GOr):
            return a | b
        return a.implies(b)
    raise TypeError(f"not a global formula: {f!r}")


def eventually_witness(f, beh, env=None, registry=None, mode: str = "horizon",
                       tol: float = 1e-9):
    """First tick at which the body of ``@c. F[lo,hi] body`` holds, else None."""
    if not (isinstance(f, ClockBind) and isinstance(f.body, Eventually)):
        raise ValueError("expected a formula of the form @c. F[..] body")
    ev = LocalEvaluator(beh, f.clock, env, registry, mode, tol)
    node = f.body
    hi = ev.n - 1 if node.hi is None else node.hi
    for q in range(node.lo, hi + 1):
        if ev.eval(node.body, q) is T:
            return q
    return None


def first_failure(phi, beh, clock: str, env=None, registry=None, mode="finite",
                  tol: float = 1e-9):
    """Earliest tick where ``phi`` (or the body of ``G phi``) is False."""
    ev = LocalEvaluator(beh, clock, env, registry, mode, tol)
    if not isinstance(phi, Globally):
        return 0 if ev.eval(phi, 0) is F_ else None
    last = ev.n - 1 if phi.hi is None else min(phi.hi, ev.n - 1)
    for q in range(phi.lo, last + 1):
        if ev.eval(phi.body, q) is F_:
            return q
    return None


def check_names(f, beh, env=None, registry=None) -> None:
    """Bind step: raise BindError for names that resolve to nothing."""
    from .ast import walk

    if registry is None:
        from ..predicates import default_registry

        registry = default_registry()
    env = env or {}
    for node in walk(f):
        if isinstance(node, ClockBind) and node.clock not in beh.clocks:
            raise BindError(f"unknown clock {node.clock!r}")
        if isinstance(node, Pred) and node.name not in registry:
            raise BindError(f"unknown predicate {node.name!r}")
        if isinstance(node, Var) and not (
            node.name in beh.clocks or node.name in beh.variables or node.name in env
        ):
            raise BindError(f"unresolved name {node.name!r}")
        if isinstance(node, ClockPair):
            for c in (node.mid, node.target):
                if c not in beh.clocks:
                    raise BindError(f"unknown clock {c!r}")
