"""Brute-force reference semantics for MCL, written straight from the definitions.

No memoization and no suffix arrays: temporal operators recurse on
shifted executions, and every read walks the raw recorded arrays.
Shared with the production evaluator are only the AST classes.
"""

from __future__ import annotations

import math

from multiclock.behaviors import shift_execution
from multiclock.mcl.ast import (
    Arith, BoolConst, Clock, ClockBind, ClockPair, Compare, Const, Eventually,
    GAnd, GImplies, GNot, GOr, Globally, Ite, LAnd, LImplies, LNot, LOr, Var,
)

T, F, I = "T", "F", "I"


class Missing(Exception):
    pass


def k_not(a):
    return {T: F, F: T, I: I}[a]


def k_and(a, b):
    if F in (a, b):
        return F
    return I if I in (a, b) else T


def k_or(a, b):
    return k_not(k_and(k_not(a), k_not(b)))


def _index(beh, src, tgt, tick):
    """Raw map lookup on the base arrays, shift applied to the source."""
    base = beh.base
    tick = tick + beh.shifts.get(src, 0)
    if tick < 0 or tick >= base.traces[src].length:
        raise Missing
    if src == tgt:
        return tick
    return int(base.syncs[(src, tgt)].samples[tick])


def _clock_value(beh, tgt, idx):
    return idx * beh.base.h if beh.base.clocks[tgt].physical else idx


def term(t, beh, c, env):
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Arith):
        a, b = term(t.left, beh, c, env), term(t.right, beh, c, env)
        return {"+": a + b, "-": a - b, "*": a * b}[t.op]
    if isinstance(t, Clock) or (isinstance(t, Var) and t.name in beh.base.clocks):
        return _clock_value(beh, t.name, _index(beh, c, t.name, t.offset))
    if isinstance(t, ClockPair):
        first = _index(beh, c, t.mid, t.offset)
        return _clock_value(beh, t.target, _index(beh, t.mid, t.target, first))
    if isinstance(t, Var):
        if t.name in beh.base.variables:
            owner = beh.base.variables[t.name].clock
            idx = _index(beh, c, owner, t.offset)
            if idx < 0 or idx >= beh.base.traces[owner].length:
                raise Missing
            return beh.base.traces[owner].columns[t.name][idx]
        return env[t.name]
    raise TypeError(t)


def compare(op, a, b, tol=1e-9):
    a, b = float(a), float(b)
    return {
        "=": abs(a - b) <= tol,
        "!=": abs(a - b) > tol,
        "<": a < b - tol,
        "<=": a <= b + tol,
        ">": a > b + tol,
        ">=": a >= b - tol,
    }[op]


def local(phi, beh, c, env=None, n=None):
    """Verdict of ``phi`` at tick 0 of ``beh`` viewed from clock ``c``.

    ``n`` is the number of recorded ticks of ``c`` in this view; unbounded
    windows are settled only by a witness inside the recorded suffix.
    """
    env = env or {}
    if n is None:
        n = beh.base.traces[c].length - beh.shifts.get(c, 0)
    if isinstance(phi, BoolConst):
        return T if phi.value else F
    if isinstance(phi, Compare):
        try:
            return T if compare(phi.op, term(phi.left, beh, c, env), term(phi.right, beh, c, env)) else F
        except Missing:
            return I
    if isinstance(phi, LNot):
        return k_not(local(phi.body, beh, c, env, n))
    if isinstance(phi, LAnd):
        return k_and(local(phi.left, beh, c, env, n), local(phi.right, beh, c, env, n))
    if isinstance(phi, LOr):
        return k_or(local(phi.left, beh, c, env, n), local(phi.right, beh, c, env, n))
    if isinstance(phi, LImplies):
        return k_or(k_not(local(phi.left, beh, c, env, n)), local(phi.right, beh, c, env, n))
    if isinstance(phi, Ite):
        cv = local(phi.cond, beh, c, env, n)
        a = local(phi.then, beh, c, env, n)
        b = local(phi.orelse, beh, c, env, n)
        return k_and(k_or(k_not(cv), a), k_or(cv, b))
    if isinstance(phi, (Eventually, Globally)):
        ev = isinstance(phi, Eventually)

        def at(k):
            return local(phi.body, shift_execution(beh, c, k), c, env, n - k)

        if phi.hi is not None:
            vals = [at(k) for k in range(phi.lo, phi.hi + 1)]
            acc = F if ev else T
            for v in vals:
                acc = k_or(acc, v) if ev else k_and(acc, v)
            return acc
        decisive = T if ev else F
        last = max(n - 1, phi.lo)
        for k in range(phi.lo, last + 1):
            if at(k) == decisive:
                return decisive
        return I
    raise TypeError(phi)


def global_(f, beh, env=None):
    if isinstance(f, ClockBind):
        return local(f.body, beh, f.clock, env)
    if isinstance(f, GNot):
        return k_not(global_(f.body, beh, env))
    if isinstance(f, GAnd):
        return k_and(global_(f.left, beh, env), global_(f.right, beh, env))
    if isinstance(f, GOr):
        return k_or(global_(f.left, beh, env), global_(f.right, beh, env))
    if isinstance(f, GImplies):
        return k_or(k_not(global_(f.left, beh, env)), global_(f.right, beh, env))
    raise TypeError(f)


def as_letter(verdict) -> str:
    return {"true": T, "false": F, "inconclusive": I}[verdict.value]


def rho_bound(t, U, G, L_f, L_g):
    return U * G * t * t * math.exp((L_f + L_g * U) * t)
