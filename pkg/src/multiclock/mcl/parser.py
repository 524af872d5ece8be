"""Recursive-descent parser for the concrete MCL syntax."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import (
    Arith, BoolConst, ClockBind, ClockPair, Compare, Const, Eventually, GAnd,
    GImplies, GNot, GOr, Globally, Ite, LAnd, LImplies, LNot, LOr, Pred, Var,
)

KEYWORDS = {"F", "G", "if", "then", "else", "inf", "true", "false"}
CMP = {"<", "<=", "=", "!=", ">", ">="}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>&&|\|\||->|<=|>=|!=|[@.!()\[\],;^+\-*<>=])
    """,
    re.VERBOSE,
)


class MCLSyntaxError(SyntaxError):
    def __init__(self, msg, line, col):
        super().__init__(f"{msg} at line {line}, column {col}")
        self.line = line
        self.col = col
        self.pos = 0


@dataclass
class Token:
    kind: str  # 'id', 'num', 'int', 'op', 'kw', 'eof'
    text: str
    line: int
    col: int
    pos: int


def tokenize(text: str) -> list[Token]:
    out = []
    i, line, line_start = 0, 1, 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise MCLSyntaxError(f"unexpected character {text[i]!r}", line, i - line_start + 1)
        kind = m.lastgroup
        s = m.group()
        col = i - line_start + 1
        if kind == "num":
            out.append(Token("int" if s.isdigit() else "num", s, line, col, i))
        elif kind == "id":
            out.append(Token("kw" if s in KEYWORDS else "id", s, line, col, i))
        elif kind == "op":
            out.append(Token("op", s, line, col, i))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = i + s.rindex("\n") + 1
        i = m.end()
    out.append(Token("eof", "", line, i - line_start + 1, i))
    return out


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.binder = None
        self.furthest = None

    # helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text in texts

    def error(self, msg, tok=None):
        tok = tok or self.tok
        err = MCLSyntaxError(msg, tok.line, tok.col)
        err.pos = tok.pos
        if self.furthest is None or err.pos >= self.furthest.pos:
            self.furthest = err
        return err

    def expect(self, text):
        if not self.at(text):
            got = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, got {got!r}")
        self.i += 1

    def ident(self) -> str:
        if self.tok.kind != "id":
            raise self.error(f"expected identifier, got {self.tok.text!r}")
        name = self.tok.text
        self.i += 1
        return name

    def integer(self) -> int:
        sign = 1
        if self.at("-"):
            sign = -1
            self.i += 1
        if self.tok.kind != "int":
            raise self.error("expected integer")
        v = int(self.tok.text)
        self.i += 1
        return sign * v

    # global layer

    def parse_global(self):
        node = self.g_or()
        while self.at("->"):
            self.i += 1
            node = GImplies(node, self.g_or())
        return node

    def g_or(self):
        node = self.g_and()
        while self.at("||"):
            self.i += 1
            node = GOr(node, self.g_and())
        return node

    def g_and(self):
        node = self.g_unary()
        while self.at("&&"):
            self.i += 1
            node = GAnd(node, self.g_unary())
        return node

    def g_unary(self):
        if self.at("!"):
            self.i += 1
            return GNot(self.g_unary())
        if self.at("("):
            self.i += 1
            node = self.parse_global()
            self.expect(")")
            return node
        if self.at("@"):
            self.i += 1
            clock = self.ident()
            self.expect(".")
            outer, self.binder = self.binder, clock
            try:
                body = self.l_implies()
            finally:
                self.binder = outer
            return ClockBind(clock, body)
        raise self.error("expected '@', '!' or '(' at start of global formula")

    # local layer

    def _next_is_bind(self) -> bool:
        j = self.i
        while self.toks[j].kind == "op" and self.toks[j].text in ("(", "!"):
            j += 1
        return self.toks[j].kind == "op" and self.toks[j].text == "@"

    def _binop(self, text):
        return self.at(text) and not self._after_is_bind()

    def _after_is_bind(self) -> bool:
        self.i += 1
        try:
            return self._next_is_bind()
        finally:
            self.i -= 1

    def l_implies(self):
        node = self.l_or()
        while self._binop("->"):
            self.i += 1
            node = LImplies(node, self.l_or())
        return node

    def l_or(self):
        node = self.l_and()
        while self._binop("||"):
            self.i += 1
            node = LOr(node, self.l_and())
        return node

    def l_and(self):
        node = self.l_unary()
        while self._binop("&&"):
            self.i += 1
            node = LAnd(node, self.l_unary())
        return node

    def l_unary(self):
        if self.at("!"):
            self.i += 1
            return LNot(self.l_unary())
        if self.at("F", "G"):
            op = self.tok.text
            self.i += 1
            lo, hi = 0, None
            if self.at("["):
                self.i += 1
                lo = self.integer()
                self.expect(",")
                if self.at("inf"):
                    self.i += 1
                else:
                    hi = self.integer()
                self.expect("]")
                if lo < 0 or (hi is not None and hi < lo):
                    raise self.error(f"bad interval [{lo},{hi}]")
            body = self.l_unary()
            return Eventually(lo, hi, body) if op == "F" else Globally(lo, hi, body)
        if self.at("if"):
            self.i += 1
            cond = self.l_implies()
            self.expect("then")
            then = self.l_implies()
            self.expect("else")
            return Ite(cond, then, self.l_implies())
        if self.at("true", "false"):
            v = self.tok.text == "true"
            self.i += 1
            return BoolConst(v)
        if self.at("("):
            start = self.i
            try:
                return self.comparison()
            except MCLSyntaxError:
                self.i = start
            self.i += 1
            node = self.l_implies()
            self.expect(")")
            return node
        if self.tok.kind == "id" and self.peek().text == "(" and self.peek().kind == "op":
            if not self._is_offset_tail():
                return self.predicate()
        return self.comparison()

    def _is_offset_tail(self) -> bool:
        # ID '(' [-] INT ')' is a term tail; anything else is a predicate call
        j = self.i + 2
        if self.toks[j].kind == "op" and self.toks[j].text == "-":
            j += 1
        return self.toks[j].kind == "int" and self.toks[j + 1].text == ")"

    def predicate(self):
        name = self.ident()
        self.expect("(")
        args, params = [], []
        if not self.at(";", ")"):
            args.append(self.term())
            while self.at(","):
                self.i += 1
                args.append(self.term())
        if self.at(";"):
            self.i += 1
            if not self.at(")"):
                params.append(self.term())
                while self.at(","):
                    self.i += 1
                    params.append(self.term())
        self.expect(")")
        return Pred(name, tuple(args), tuple(params))

    def comparison(self):
        left = self.term()
        if not (self.tok.kind == "op" and self.tok.text in CMP):
            raise self.error("expected comparison operator")
        op = self.tok.text
        self.i += 1
        return Compare(op, left, self.term())

    # terms

    def term(self):
        node = self.t_mul()
        while self.at("+", "-"):
            op = self.tok.text
            self.i += 1
            node = Arith(op, node, self.t_mul())
        return node

    def t_mul(self):
        node = self.t_atom()
        while self.at("*"):
            self.i += 1
            node = Arith("*", node, self.t_atom())
        return node

    def t_atom(self):
        tok = self.tok
        if tok.kind in ("num", "int"):
            self.i += 1
            return Const(float(tok.text))
        if self.at("-") and self.peek().kind in ("num", "int"):
            self.i += 2
            return Const(-float(self.toks[self.i - 1].text))
        if self.at("("):
            self.i += 1
            node = self.term()
            self.expect(")")
            return node
        if tok.kind == "id":
            name = self.ident()
            if self.at("^"):
                self.i += 1
                target = self.ident()
                if name == self.binder:
                    raise self.error(
                        f"clock pair {name}^{target} uses the bound clock as its middle clock", tok
                    )
                offset = 0
                if self.at("("):
                    self.expect("(")
                    offset = self.integer()
                    self.expect(")")
                return ClockPair(name, target, offset)
            if self.at("(") and self._is_int_paren():
                self.i += 1
                offset = self.integer()
                self.expect(")")
                arg = None
                if self.at("("):
                    self.i += 1
                    arg = self.term()
                    self.expect(")")
                return Var(name, offset, arg)
            return Var(name)
        raise self.error(f"expected term, got {tok.text or 'end of input'!r}")

    def _is_int_paren(self) -> bool:
        j = self.i + 1
        if self.toks[j].text == "-" and self.toks[j].kind == "op":
            j += 1
        return self.toks[j].kind == "int" and self.toks[j + 1].text == ")"


def parse(text: str):
    """Parse a global MCL formula."""
    p = Parser(text)
    try:
        node = p.parse_global()
        if p.tok.kind != "eof":
            raise p.error(f"unexpected {p.tok.text!r}")
    except MCLSyntaxError as err:
        best = p.furthest if p.furthest is not None else err
        raise (best if best.pos > err.pos else err) from None
    return node


def parse_local(text: str, binder: str | None = None):
    """Parse a local formula (used by tests and the contract loader)."""
    p = Parser(text)
    p.binder = binder
    node = p.l_implies()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return node
