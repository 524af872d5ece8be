"""Multiclock Logic: syntax, printing and three-valued evaluation."""

from .ast import (
    Arith, BoolConst, Clock, ClockBind, ClockPair, Compare, Const, Eventually,
    GAnd, GImplies, GNot, GOr, Globally, Ite, LAnd, LImplies, LNot, LOr, Param,
    Pred, Var, conj, depth, split_conj, to_text, walk,
)
from .evaluate import (
    BindError, LocalEvaluator, Verdict, check_names, eval_global, eval_local,
    eventually_witness, first_failure,
)
from .parser import MCLSyntaxError, parse, parse_local

print_formula = to_text

__all__ = [
    "Arith", "BoolConst", "Clock", "ClockBind", "ClockPair", "Compare", "Const",
    "Eventually", "GAnd", "GImplies", "GNot", "GOr", "Globally", "Ite", "LAnd",
    "LImplies", "LNot", "LOr", "Param", "Pred", "Var", "conj", "depth",
    "split_conj", "to_text", "print_formula", "walk", "BindError", "LocalEvaluator",
    "Verdict", "check_names", "eval_global", "eval_local", "eventually_witness",
    "first_failure", "MCLSyntaxError", "parse", "parse_local",
]
