"""Abstract syntax of Multiclock Logic and its canonical printer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

# Terms


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    """A name read at a tick offset.

    Until bound, clocks and parameters also parse as ``Var``; the
    evaluator resolves names against the behavior and parameter env.
    """

    name: str
    offset: int = 0
    traj_arg: Optional["Term"] = None


@dataclass(frozen=True)
class Clock:
    name: str
    offset: int = 0


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class ClockPair:
    mid: str
    target: str
    offset: int = 0


@dataclass(frozen=True)
class Arith:
    op: str  # '+', '-', '*'
    left: "Term"
    right: "Term"


Term = Union[Const, Var, Clock, Param, ClockPair, Arith]

# Local formulas


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class Pred:
    name: str
    args: tuple
    params: tuple = ()


@dataclass(frozen=True)
class Compare:
    op: str  # '<', '<=', '=', '!=', '>', '>='
    left: Term
    right: Term


@dataclass(frozen=True)
class LNot:
    body: "Local"


@dataclass(frozen=True)
class LAnd:
    left: "Local"
    right: "Local"


@dataclass(frozen=True)
class LOr:
    left: "Local"
    right: "Local"


@dataclass(frozen=True)
class LImplies:
    left: "Local"
    right: "Local"


@dataclass(frozen=True)
class Ite:
    cond: "Local"
    then: "Local"
    orelse: "Local"


@dataclass(frozen=True)
class Eventually:
    lo: int
    hi: Optional[int]  # None is unbounded
    body: "Local"

    def __post_init__(self):
        if self.lo < 0 or (self.hi is not None and self.hi < self.lo):
            raise ValueError(f"bad interval [{self.lo},{self.hi}]")


@dataclass(frozen=True)
class Globally:
    lo: int
    hi: Optional[int]
    body: "Local"

    def __post_init__(self):
        if self.lo < 0 or (self.hi is not None and self.hi < self.lo):
            raise ValueError(f"bad interval [{self.lo},{self.hi}]")


Local = Union[BoolConst, Pred, Compare, LNot, LAnd, LOr, LImplies, Ite, Eventually, Globally]

# Global formulas


@dataclass(frozen=True)
class ClockBind:
    clock: str
    body: Local


@dataclass(frozen=True)
class GNot:
    body: "Global"


@dataclass(frozen=True)
class GAnd:
    left: "Global"
    right: "Global"


@dataclass(frozen=True)
class GOr:
    left: "Global"
    right: "Global"


@dataclass(frozen=True)
class GImplies:
    left: "Global"
    right: "Global"


Global = Union[ClockBind, GNot, GAnd, GOr, GImplies]

TRUE = BoolConst(True)
FALSE = BoolConst(False)


def conj(parts, local=False):
    """Left-nested conjunction of a nonempty sequence."""
    parts = list(parts)
    node = parts[0]
    for p in parts[1:]:
        node = LAnd(node, p) if local else GAnd(node, p)
    return node


def split_conj(f) -> list:
    if isinstance(f, (GAnd, LAnd)):
        return split_conj(f.left) + split_conj(f.right)
    return [f]


# Printer

_BIN = {LImplies: (1, "->"), LOr: (2, "||"), LAnd: (3, "&&"),
        GImplies: (1, "->"), GOr: (2, "||"), GAnd: (3, "&&")}


def _prec(node) -> int:
    if isinstance(node, (Ite, ClockBind)):
        return 0
    if type(node) in _BIN:
        return _BIN[type(node)][0]
    if isinstance(node, (LNot, GNot, Eventually, Globally)):
        return 4
    return 5


def _wrap(node, need: int) -> str:
    s = to_text(node)
    return f"({s})" if _prec(node) < need else s


def _operand(node) -> str:
    # comparisons get parentheses under prefix operators for readability
    s = to_text(node)
    return f"({s})" if _prec(node) < 4 or isinstance(node, Compare) else s


def _num(x: float) -> str:
    x = float(x)
    if x == int(x) and abs(x) < 1e15:
        return f"{int(x)}.0"
    return repr(x)


_TERM_PREC = {"+": 1, "-": 1, "*": 2}


def _term(t, need: int = 0) -> str:
    if isinstance(t, Const):
        return _num(t.value)
    if isinstance(t, Var):
        s = t.name
        if t.offset or t.traj_arg is not None:
            s += f"({t.offset})"
        if t.traj_arg is not None:
            s += f"({_term(t.traj_arg)})"
        return s
    if isinstance(t, Clock):
        return t.name + (f"({t.offset})" if t.offset else "")
    if isinstance(t, Param):
        return t.name
    if isinstance(t, ClockPair):
        return f"{t.mid}^{t.target}" + (f"({t.offset})" if t.offset else "")
    if isinstance(t, Arith):
        p = _TERM_PREC[t.op]
        s = f"{_term(t.left, p)} {t.op} {_term(t.right, p + 1)}"
        return f"({s})" if p < need else s
    raise TypeError(f"not a term: {t!r}")


def _interval(node) -> str:
    hi = "inf" if node.hi is None else str(node.hi)
    return f"[{node.lo},{hi}]"


def to_text(node) -> str:
    """Canonical concrete syntax; ``parse(to_text(f)) == f``."""
    if isinstance(node, ClockBind):
        return f"@{node.clock}. {to_text(node.body)}"
    if type(node) in _BIN:
        p, op = _BIN[type(node)]
        return f"{_wrap(node.left, p)} {op} {_wrap(node.right, p + 1)}"
    if isinstance(node, (LNot, GNot)):
        return "!" + _operand(node.body)
    if isinstance(node, Eventually):
        return "F" + _interval(node) + " " + _operand(node.body)
    if isinstance(node, Globally):
        return "G" + _interval(node) + " " + _operand(node.body)
    if isinstance(node, Ite):
        return (f"if {_wrap(node.cond, 1)} then {_wrap(node.then, 1)} "
                f"else {_wrap(node.orelse, 0)}")
    if isinstance(node, BoolConst):
        return "true" if node.value else "false"
    if isinstance(node, Compare):
        return f"{_term(node.left)} {node.op} {_term(node.right)}"
    if isinstance(node, Pred):
        args = ", ".join(_term(a) for a in node.args)
        if node.params:
            return f"{node.name}({args}; {', '.join(_term(p) for p in node.params)})"
        return f"{node.name}({args})"
    return _term(node)


def walk(node):
    """Yield every node of a formula or term, parents first."""
    yield node
    if isinstance(node, (ClockBind, LNot, GNot, Eventually, Globally)):
        yield from walk(node.body)
    elif type(node) in _BIN or isinstance(node, (Arith, Compare)):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, Ite):
        for part in (node.cond, node.then, node.orelse):
            yield from walk(part)
    elif isinstance(node, Pred):
        for part in node.args + node.params:
            yield from walk(part)
    elif isinstance(node, Var) and node.traj_arg is not None:
        yield from walk(node.traj_arg)


def depth(node) -> int:
    if isinstance(node, (ClockBind, LNot, GNot, Eventually, Globally)):
        return 1 + depth(node.body)
    if type(node) in _BIN:
        return 1 + max(depth(node.left), depth(node.right))
    if isinstance(node, Ite):
        return 1 + max(depth(node.cond), depth(node.then), depth(node.orelse))
    return 0
