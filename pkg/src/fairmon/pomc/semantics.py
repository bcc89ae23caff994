"""Exact semantics of atoms and expressions on a known model (the test oracle)."""

from __future__ import annotations

import math

import numpy as np

from ..bse.ast import (
    WILDCARD, Add, And, Atom, AtomicFunction, Const, Geq0, Inv, Mul, Not, TrueExpr,
)
from .model import PomcModel

WINDOW_LIMIT = 10 ** 8


class SemanticsError(ValueError):
    pass


class UndefinedSemantics(SemanticsError):
    """Division by a sub-expression whose exact value is zero."""


def window_probability(model: PomcModel, word, start: np.ndarray | None = None) -> float:
    """Probability that the observations at positions ``1..n`` read ``word``."""
    alpha = model.start_distribution() if start is None else np.asarray(start, dtype=float)
    mt = model.transitions.T.tocsr()
    masks = {}
    for i, tok in enumerate(word):
        if tok != WILDCARD:
            mask = masks.get(tok)
            if mask is None:
                mask = masks[tok] = model.label_mask(tok)
            alpha = alpha * mask
        if i + 1 < len(word):
            alpha = mt @ alpha
    return float(alpha.sum())


def exact_atom_semantics(model: PomcModel, fn: AtomicFunction,
                         start: np.ndarray | None = None) -> float:
    """Expected value of ``fn`` on the first window of a run started in ``start``.

    ``start`` defaults to the stationary distribution, which gives the atom's
    semantics. Observation words are enumerated depth-first with forward
    probabilities shared between common prefixes; prefixes of probability
    zero are pruned.
    """
    if not set(model.labels) <= set(fn.alphabet):
        raise SemanticsError("the model emits observations outside the atom's alphabet")
    n = fn.arity
    alphabet = tuple(fn.alphabet)
    if len(alphabet) ** n > WINDOW_LIMIT:
        raise SemanticsError(f"{len(alphabet)}^{n} observation windows exceed the enumeration limit")
    alpha0 = model.start_distribution() if start is None else np.asarray(start, dtype=float)
    if not fn._wild:
        # Sparse table: default everywhere, corrected on the listed words.
        total = [fn.default]
        for pattern, value in fn._exact.items():
            if value != fn.default:
                total.append((value - fn.default) * window_probability(model, pattern, alpha0))
        return math.fsum(total)
    mt = model.transitions.T.tocsr()
    masks = [model.label_mask(tok) for tok in alphabet]
    terms = []

    def walk(prefix, alpha):
        for tok, mask in zip(alphabet, masks):
            a = alpha * mask
            if not a.any():
                continue
            word = prefix + (tok,)
            if len(word) == n:
                v = fn(word)
                if v:
                    terms.append(v * float(a.sum()))
            else:
                walk(word, mt @ a)

    walk((), alpha0)
    return math.fsum(terms)


def exact_expr_semantics(model: PomcModel, expr, cache: dict | None = None) -> float:
    cache = {} if cache is None else cache

    def go(e):
        if isinstance(e, Const):
            return e.value
        if isinstance(e, Atom):
            if e.fn not in cache:
                cache[e.fn] = exact_atom_semantics(model, e.fn)
            return cache[e.fn]
        if isinstance(e, Add):
            return go(e.left) + go(e.right)
        if isinstance(e, Mul):
            return go(e.left) * go(e.right)
        if isinstance(e, Inv):
            v = go(e.child)
            if v == 0:
                raise UndefinedSemantics("division by an expression whose value is zero")
            return 1.0 / v
        raise SemanticsError(f"not a quantitative expression: {e!r}")

    return go(expr)


def exact_qual_semantics(model: PomcModel, expr, cache: dict | None = None) -> bool:
    cache = {} if cache is None else cache

    def go(e):
        if isinstance(e, TrueExpr):
            return True
        if isinstance(e, Geq0):
            return exact_expr_semantics(model, e.child, cache) >= 0
        if isinstance(e, Not):
            return not go(e.child)
        if isinstance(e, And):
            return go(e.left) and go(e.right)
        raise SemanticsError(f"not a qualitative expression: {e!r}")

    return go(expr)


def exact_semantics(model: PomcModel, expr):
    if isinstance(expr, (TrueExpr, Geq0, Not, And)):
        return exact_qual_semantics(model, expr)
    return exact_expr_semantics(model, expr)
