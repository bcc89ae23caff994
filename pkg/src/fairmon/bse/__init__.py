"""Bounded specification expressions: atoms, expression trees and the file syntax."""

from .ast import (
    And, Atom, AtomicFunction, Add, Const, Geq0, Inv, Mul, Not, QualExpr, QuantExpr, SpecError,
    TrueExpr, collect_atoms, desugar, is_qual, is_quant, iter_nodes, make_conditional_expr,
    make_sequence_prob_atom,
)
from .spec import SpecDocument, format_expr, format_spec, parse_spec

__all__ = [
    "Add", "And", "Atom", "AtomicFunction", "Const", "Geq0", "Inv", "Mul", "Not", "QualExpr",
    "QuantExpr", "SpecDocument", "SpecError", "TrueExpr", "collect_atoms", "desugar",
    "format_expr", "format_spec", "is_qual", "is_quant", "iter_nodes", "make_conditional_expr",
    "make_sequence_prob_atom", "parse_spec",
]
