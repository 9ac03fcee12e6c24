"""Canonical expression algebra: parsing, canonical forms and jet-space calculus."""

from .canon import (
    CanonExpr,
    Term,
    add,
    at_zero,
    compose,
    jet_name,
    mul,
    neg,
    partial,
    scale,
    substitute_jet,
    total_derivative,
    total_derivative_n,
    trig_product,
    truncate,
)
from .convert import NotCanonical, canonicalize, from_text, to_tree
from .linform import LinForm, NonlinearUnknowns
from .parser import ParseError, UnknownIdentifier, parse
from .tree import DomainError, compile_tree, diff, eval_numeric, to_text

__all__ = [
    "CanonExpr",
    "DomainError",
    "LinForm",
    "NonlinearUnknowns",
    "NotCanonical",
    "ParseError",
    "Term",
    "UnknownIdentifier",
    "add",
    "at_zero",
    "canonicalize",
    "compile_tree",
    "compose",
    "diff",
    "eval_numeric",
    "from_text",
    "jet_name",
    "mul",
    "neg",
    "parse",
    "partial",
    "scale",
    "substitute_jet",
    "to_text",
    "to_tree",
    "total_derivative",
    "total_derivative_n",
    "trig_product",
    "truncate",
]
