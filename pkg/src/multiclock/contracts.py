"""Assume-guarantee contracts over MCL and their algebra.

A contract is a pair (assume, guarantee) of global formulas.  A behavior
satisfies it when ``assume -> guarantee`` evaluates True.  Refinement and
composition soundness are checked extensionally on a corpus of
behaviors; nothing here is a proof.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .mcl import (
    BoolConst, ClockBind, GAnd, GImplies, GNot, GOr, Verdict, eval_global,
    first_failure, parse, split_conj, to_text, walk,
)


class ContractFormatError(ValueError):
    pass


class ClockMismatch(ValueError):
    """Two contracts bind the same parameter name to different values."""


@dataclass
class Contract:
    name: str
    assume: object
    guarantee: object
    params: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def clocks(self) -> set:
        return {n.clock for f in (self.assume, self.guarantee) for n in walk(f)
                if isinstance(n, ClockBind)}

    def implication(self):
        return GImplies(self.assume, self.guarantee)

    def dumps(self) -> str:
        return dump_contract(self)


# file format


_HEADER = re.compile(r"^(name|params|assume|guarantee):\s*(.*)$")


def _param_value(text: str):
    text = text.strip()
    if text.startswith("["):
        if not text.endswith("]"):
            raise ContractFormatError(f"unterminated vector {text!r}")
        items = [s for s in text[1:-1].split(",") if s.strip()]
        return np.array([float(s) for s in items])
    return float(text)


def _format_value(v) -> str:
    if np.ndim(v):
        return "[" + ", ".join(repr(float(x)) for x in np.ravel(v)) + "]"
    return repr(float(v))


def loads_contract(text: str) -> Contract:
    blocks: dict[str, list[str]] = {}
    notes = []
    name = None
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        if line.startswith("#"):
            notes.append(line[1:].strip())
            continue
        m = _HEADER.match(line)
        if m:
            key, rest = m.groups()
            if key in blocks or (key == "name" and name is not None):
                raise ContractFormatError(f"line {lineno}: duplicate {key} block")
            if key == "name":
                name = rest.strip()
                current = None
                continue
            current = key
            blocks[key] = [rest] if rest.strip() else []
            continue
        if not line.strip():
            continue
        if current is None:
            raise ContractFormatError(f"line {lineno}: text outside a block")
        blocks[current].append(line)
    for key in ("assume", "guarantee"):
        if key not in blocks:
            raise ContractFormatError(f"missing {key}: block")
    params = {}
    for line in blocks.get("params", []):
        s = line.split("//", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ContractFormatError(f"bad parameter line {line.strip()!r}")
        k, v = s.split("=", 1)
        params[k.strip()] = _param_value(v)
    return Contract(
        name or "contract",
        parse("\n".join(blocks["assume"])),
        parse("\n".join(blocks["guarantee"])),
        params,
        notes,
    )


def load_contract(path) -> Contract:
    return loads_contract(Path(path).read_text())


def dump_contract(c: Contract) -> str:
    out = [f"# {n}" for n in c.notes]
    out.append(f"name: {c.name}")
    if c.params:
        out.append("params:")
        out += [f"  {k} = {_format_value(v)}" for k, v in c.params.items()]
    for key, f in (("assume", c.assume), ("guarantee", c.guarantee)):
        out.append(f"{key}:")
        parts = split_conj(f)
        for i, p in enumerate(parts):
            text = to_text(p)
            if len(parts) > 1:
                text = f"({text})"
            out.append("  " + text + (" &&" if i < len(parts) - 1 else ""))
    return "\n".join(out) + "\n"


def save_contract(c: Contract, path) -> None:
    Path(path).write_text(dump_contract(c))


# satisfaction


@dataclass
class Failure:
    formula: str
    clock: Optional[str]
    tick: Optional[int]
    side: str  # 'assume' or 'guarantee'


@dataclass
class BehaviorVerdict:
    assume: Verdict
    guarantee: Verdict
    implication: Verdict
    failures: list


@dataclass
class SatisfactionReport:
    contract: str
    behaviors: list

    @property
    def verdict(self) -> Verdict:
        v = Verdict.TRUE
        for b in self.behaviors:
            v = v & b.implication
        return v

    def to_text(self) -> str:
        lines = [f"contract {self.contract}: {self.verdict}"]
        for i, b in enumerate(self.behaviors):
            lines.append(f"  behavior {i}: assume {b.assume}, guarantee {b.guarantee}, "
                         f"assume -> guarantee {b.implication}")
            for f in b.failures:
                where = f"@{f.clock} tick {f.tick}" if f.tick is not None else "(whole)"
                lines.append(f"    {f.side} false at {where}: {f.formula}")
        return "\n".join(lines) + "\n"


def _env(c: Contract, env) -> dict:
    merged = dict(c.params)
    merged.update(env or {})
    return merged


def _localize(f, beh, env, registry, mode, side) -> list:
    out = []
    for part in split_conj(f):
        if eval_global(part, beh, env, registry, mode) is not Verdict.FALSE:
            continue
        tick = clock = None
        if isinstance(part, ClockBind):
            clock = part.clock
            tick = first_failure(part.body, beh, clock, env, registry, mode)
        out.append(Failure(to_text(part), clock, tick, side))
    return out


def satisfies(behaviors, c: Contract, env=None, registry=None,
              mode: str = "finite") -> SatisfactionReport:
    """Evaluate ``assume -> guarantee`` on each behavior."""
    env = _env(c, env)
    rows = []
    for beh in behaviors:
        a = eval_global(c.assume, beh, env, registry, mode)
        g = eval_global(c.guarantee, beh, env, registry, mode)
        fails = _localize(c.assume, beh, env, registry, mode, "assume")
        fails += _localize(c.guarantee, beh, env, registry, mode, "guarantee")
        rows.append(BehaviorVerdict(a, g, a.implies(g), fails))
    return SatisfactionReport(c.name, rows)


# composition


def _const(f) -> Optional[bool]:
    if isinstance(f, ClockBind) and isinstance(f.body, BoolConst):
        return f.body.value
    return None


def _clock_of(f) -> str:
    for n in walk(f):
        if isinstance(n, ClockBind):
            return n.clock
    return "r"


def _lit(value: bool, like) -> ClockBind:
    return ClockBind(_clock_of(like), BoolConst(value))


def _not(f):
    v = _const(f)
    return _lit(not v, f) if v is not None else GNot(f)


def _and(a, b):
    if a == b:
        return a
    va, vb = _const(a), _const(b)
    if va is False or vb is False:
        return _lit(False, a if va is False else b)
    if va is True:
        return b
    if vb is True:
        return a
    return GAnd(a, b)


def _implies(a, b):
    va, vb = _const(a), _const(b)
    if va is False or vb is True:
        return _lit(True, a)
    if va is True:
        return b
    return GImplies(a, b)


def _flat(parts, op):
    out = []
    for p in parts:
        if p not in out:
            out.append(p)
    node = out[0]
    for p in out[1:]:
        node = op(node, p)
    return node


def _merge_params(c1: Contract, c2: Contract) -> dict:
    merged = dict(c1.params)
    for k, v in c2.params.items():
        if k in merged and not np.array_equal(np.asarray(merged[k]), np.asarray(v)):
            raise ClockMismatch(f"parameter {k} bound to {merged[k]} and {v}")
        merged[k] = v
    return merged


def compose(c1: Contract, c2: Contract, name: Optional[str] = None) -> Contract:
    """Parallel composition.

    assumptions: (a & a') | (a & !g) | (a' & !g')
    guarantees:  (a -> g) & (a' -> g')

    Each term has literal true/false folded and the outer disjunction and
    conjunction drop syntactic duplicates; nothing else is simplified.
    """
    a1, g1, a2, g2 = c1.assume, c1.guarantee, c2.assume, c2.guarantee
    assume = _flat([_and(a1, a2), _and(a1, _not(g1)), _and(a2, _not(g2))], GOr)
    guarantee = _flat([_implies(a1, g1), _implies(a2, g2)], GAnd)
    return Contract(name or f"{c1.name}||{c2.name}", assume, guarantee, _merge_params(c1, c2))


def compose_all(contracts, name: Optional[str] = None) -> Contract:
    contracts = list(contracts)
    out = contracts[0]
    for c in contracts[1:]:
        out = compose(out, c)
    if name:
        out.name = name
    return out


# refinement


@dataclass
class RefinementResult:
    holds: bool
    index: Optional[int] = None
    behavior: object = None
    reason: str = ""

    def __bool__(self):
        return self.holds


def refines_on(c: Contract, c2: Contract, corpus, env=None, registry=None,
               mode: str = "finite") -> RefinementResult:
    """Corpus-relative check of ``c <= c2``.

    Fails at the first behavior where the assumption of ``c2`` is True
    but that of ``c`` is not, or where ``c``'s implication is True but
    ``c2``'s is not.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("refinement needs a nonempty corpus")
    e1, e2 = _env(c, env), _env(c2, env)
    T = Verdict.TRUE
    for i, beh in enumerate(corpus):
        a1 = eval_global(c.assume, beh, e1, registry, mode)
        a2 = eval_global(c2.assume, beh, e2, registry, mode)
        if a2 is T and a1 is not T:
            return RefinementResult(False, i, beh, "assumption of the abstract contract holds, "
                                                   "refined assumption does not")
        i1 = a1.implies(eval_global(c.guarantee, beh, e1, registry, mode))
        i2 = a2.implies(eval_global(c2.guarantee, beh, e2, registry, mode))
        if i1 is T and i2 is not T:
            return RefinementResult(False, i, beh, "refined implication holds, abstract one does not")
    return RefinementResult(True)


@dataclass
class SoundnessReport:
    checked: int
    refinement_holds: bool
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def check_composition_soundness(c1: Contract, c2: Contract, c3: Contract, corpus,
                                env=None, registry=None, mode: str = "finite") -> SoundnessReport:
    """If both components hold and c1||c2 <= c3 on the corpus, c3 must hold too."""
    corpus = list(corpus)
    if not corpus:
        return SoundnessReport(0, True, [])
    composite = compose(c1, c2)
    refined = refines_on(composite, c3, corpus, env, registry, mode).holds
    T = Verdict.TRUE
    checked = 0
    bad = []
    for i, beh in enumerate(corpus):
        s1 = satisfies([beh], c1, env, registry, mode).verdict
        s2 = satisfies([beh], c2, env, registry, mode).verdict
        if s1 is not T or s2 is not T:
            continue
        checked += 1
        if refined and satisfies([beh], c3, env, registry, mode).verdict is not T:
            bad.append(i)
    return SoundnessReport(checked, refined, bad)


# shipped contracts


CONTRACT_FILES = {"MPC": "mpc.contract", "FL": "fl.contract", "Est": "est.contract",
                  "Tmg": "tmg.contract"}


def shipped_contracts() -> dict:
    base = Path(__file__).parent / "data" / "contracts"
    return {k: load_contract(base / f) for k, f in CONTRACT_FILES.items()}
