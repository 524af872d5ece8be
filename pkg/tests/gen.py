"""Random small behaviors and formulas for the oracle comparisons."""

from __future__ import annotations

import numpy as np

from multiclock.behaviors import (
    ClockId, ClockKind, ClockTrace, SyncMap, SystemBehavior, VariableDecl,
)
from multiclock.mcl.ast import (
    Arith, BoolConst, ClockPair, Compare, Const, Eventually, Globally, Ite, LAnd,
    LImplies, LNot, LOr, Var,
)

OPS = ("<", "<=", ">", ">=", "=", "!=")


def random_maps(rng, n_src, n_tgt, allow_missing=True):
    """Monotone map from source ticks into [-1, n_tgt - 1]."""
    lo = -1 if allow_missing else 0
    vals = np.sort(rng.integers(lo, max(n_tgt, 1), n_src))
    return vals.astype(np.int64)


def random_behavior(rng, max_ticks=6) -> SystemBehavior:
    """Discrete clock ``a`` and physical clock ``r`` with integer data."""
    na = int(rng.integers(1, max_ticks + 1))
    nr = int(rng.integers(1, max_ticks + 1))
    clocks = [ClockId("a"), ClockId("r", ClockKind.PHYSICAL)]
    variables = [VariableDecl("p", "a", "integer"), VariableDecl("q", "r", "integer")]
    traces = {
        "a": ClockTrace("a", na, {"p": [int(v) for v in rng.integers(-2, 3, na)]}),
        "r": ClockTrace("r", nr, {"q": [int(v) for v in rng.integers(-2, 3, nr)]}),
    }
    syncs = {
        ("a", "r"): SyncMap("a", "r", random_maps(rng, na, nr, allow_missing=False)),
        ("r", "a"): SyncMap("r", "a", random_maps(rng, nr, na)),
    }
    return SystemBehavior(clocks, variables, traces, syncs, h=1.0)


def random_term(rng, clock, depth=0):
    other = "r" if clock == "a" else "a"
    k = int(rng.integers(0, 7 if depth < 1 else 5))
    off = int(rng.integers(-1, 2))
    if k == 0:
        return Const(float(rng.integers(-2, 3)))
    if k in (1, 2):
        return Var(str(rng.choice(["p", "q"])), off)
    if k == 3:
        return Var(str(rng.choice([clock, other])), off)
    if k == 4:
        return ClockPair(other, str(rng.choice(["a", "r"])), off)
    op = str(rng.choice(["+", "-", "*"]))
    return Arith(op, random_term(rng, clock, depth + 1), random_term(rng, clock, depth + 1))


def random_atom(rng, clock):
    if rng.random() < 0.05:
        return BoolConst(bool(rng.integers(2)))
    return Compare(str(rng.choice(OPS)), random_term(rng, clock), random_term(rng, clock))


def random_interval(rng, bounded=True):
    lo = int(rng.integers(0, 3))
    if not bounded and rng.random() < 0.3:
        return lo, None
    return lo, lo + int(rng.integers(0, 4))


def random_local(rng, clock, depth=4, bounded=True):
    if depth <= 1 or rng.random() < 0.2:
        return random_atom(rng, clock)
    k = int(rng.integers(0, 7))
    sub = lambda: random_local(rng, clock, depth - 1, bounded)  # noqa: E731
    if k == 0:
        return LNot(sub())
    if k == 1:
        return LAnd(sub(), sub())
    if k == 2:
        return LOr(sub(), sub())
    if k == 3:
        return LImplies(sub(), sub())
    if k == 4:
        return Ite(sub(), sub(), sub())
    lo, hi = random_interval(rng, bounded)
    return (Eventually if k == 5 else Globally)(lo, hi, sub())


# propositional contracts on one-tick traces


def prop_behavior(bits) -> SystemBehavior:
    """One tick of clock ``a`` with integer variables p0..p{k-1} set to ``bits``."""
    k = len(bits)
    variables = [VariableDecl(f"p{i}", "a", "integer") for i in range(k)]
    traces = {
        "a": ClockTrace("a", 1, {f"p{i}": [int(b)] for i, b in enumerate(bits)}),
        "r": ClockTrace("r", 1, {}),
    }
    syncs = {(s, t): SyncMap(s, t, np.zeros(1, dtype=np.int64)) for s, t in (("a", "r"), ("r", "a"))}
    clocks = [ClockId("a"), ClockId("r", ClockKind.PHYSICAL)]
    return SystemBehavior(clocks, variables, traces, syncs, h=1.0)


def prop_corpus(k: int) -> list:
    return [prop_behavior([(n >> i) & 1 for i in range(k)]) for n in range(2 ** k)]


def prop_formula(table: int, k: int) -> str:
    """Global formula whose truth table over k atoms is the bitmask ``table``."""
    terms = []
    for n in range(2 ** k):
        if (table >> n) & 1:
            lits = [f"p{i} = {(n >> i) & 1}" for i in range(k)]
            terms.append("(" + " && ".join(lits) + ")")
    return "@a. " + (" || ".join(terms) if terms else "false")
