"""Expression trees, atomic functions and desugaring for bounded specification expressions.

Two fragments share one module. Quantitative expressions evaluate to reals:

    Const | Atom | Add | Mul | Inv

Qualitative expressions evaluate to booleans:

    TrueExpr | Geq0 | Not | And

Everything else the surface language offers (subtraction, negation, division,
comparisons against arbitrary right-hand sides, disjunction, sequence
probabilities) is represented by the surface-only node classes at the bottom of
this module and removed by :func:`desugar`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union

WILDCARD = "*"
# Above this many windows the structural key falls back to the written table.
ENUMERATION_LIMIT = 200_000

Word = tuple[str, ...]


class SpecError(ValueError):
    """Invalid specification text or document.

    ``line`` and ``column`` are 1-based and ``None`` when the error is not tied
    to a source position.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


def _check_token(token: str) -> None:
    if not token or not token.isprintable() or any(c.isspace() for c in token):
        raise SpecError(f"invalid observation token {token!r}")
    if token == WILDCARD or '"' in token or "#" in token:
        raise SpecError(f"observation token {token!r} uses a reserved character")


def _check_number(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise SpecError(f"{what} must be finite, got {value!r}")
    return value


class AtomicFunction:
    """A bounded function on observation windows of fixed length.

    The table is a list of ``(pattern, value)`` entries plus a mandatory
    ``default``. A pattern is a word of length ``arity`` in which at most one
    position may be the wildcard ``"*"``. Exact patterns win over wildcard
    patterns; among equally specific matches the first declared entry wins.

    Equality and hashing are structural: two atoms are equal when they have the
    same alphabet, arity, range and the same value on every window. The name is
    only a label.
    """

    __slots__ = ("name", "alphabet", "arity", "lower", "upper", "entries", "default",
                 "_exact", "_wild", "_key", "_table")

    def __init__(self, name: str, alphabet: Sequence[str], arity: int, lower: float,
                 upper: float, entries: Iterable[tuple[Sequence[str], float]], default: float):
        alphabet = tuple(alphabet)
        if not alphabet:
            raise SpecError("alphabet must not be empty")
        if len(set(alphabet)) != len(alphabet):
            raise SpecError("alphabet tokens must be unique")
        for token in alphabet:
            _check_token(token)
        if isinstance(arity, bool) or not isinstance(arity, int) or arity < 1:
            raise SpecError(f"atom {name!r}: arity must be a positive integer")
        lower = _check_number(lower, f"atom {name!r}: lower bound")
        upper = _check_number(upper, f"atom {name!r}: upper bound")
        if not lower < upper:
            raise SpecError(f"atom {name!r}: lower bound must be below upper bound")
        default = _check_number(default, f"atom {name!r}: default")
        if not lower <= default <= upper:
            raise SpecError(f"atom {name!r}: default {default} outside [{lower}, {upper}]")

        known = set(alphabet)
        normalized = []
        exact: dict[Word, float] = {}
        wild: list[tuple[int, Word, float]] = []
        for pattern, value in entries:
            pattern = tuple(pattern)
            value = _check_number(value, f"atom {name!r}: entry value")
            if len(pattern) != arity:
                raise SpecError(f"atom {name!r}: entry {' '.join(pattern)!r} has length "
                                f"{len(pattern)}, expected {arity}")
            if pattern.count(WILDCARD) > 1:
                raise SpecError(f"atom {name!r}: at most one wildcard per entry")
            for token in pattern:
                if token != WILDCARD and token not in known:
                    raise SpecError(f"atom {name!r}: unknown observation {token!r}")
            if not lower <= value <= upper:
                raise SpecError(f"atom {name!r}: entry value {value} outside [{lower}, {upper}]")
            normalized.append((pattern, value))
            if WILDCARD in pattern:
                wild.append((pattern.index(WILDCARD), pattern, value))
            else:
                exact.setdefault(pattern, value)

        self.name = name
        self.alphabet = alphabet
        self.arity = arity
        self.lower = lower
        self.upper = upper
        self.entries = tuple(normalized)
        self.default = default
        self._exact = exact
        self._wild = wild
        self._table: dict[Word, float] | None = None
        self._key = None

    def __call__(self, word: Sequence[str]) -> float:
        word = tuple(word)
        if len(word) != self.arity:
            raise ValueError(f"atom {self.name!r} expects a window of length {self.arity}")
        value = self._exact.get(word)
        if value is not None:
            return value
        for pos, pattern, value in self._wild:
            if word[:pos] == pattern[:pos] and word[pos + 1:] == pattern[pos + 1:]:
                return value
        return self.default

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def windows(self) -> Iterator[Word]:
        """All words of length ``arity`` over the alphabet, in lexicographic declaration order."""
        return itertools.product(self.alphabet, repeat=self.arity)

    def enumerable(self) -> bool:
        return len(self.alphabet) ** self.arity <= ENUMERATION_LIMIT

    def table(self) -> dict[Word, float]:
        """The total function as an explicit dict (cached)."""
        if self._table is None:
            if not self.enumerable():
                raise ValueError(f"atom {self.name!r} has too many windows to tabulate")
            self._table = {w: self(w) for w in self.windows()}
        return self._table

    def key(self):
        if self._key is None:
            if self.enumerable():
                values = tuple(self.table().values())
                self._key = (self.alphabet, self.arity, self.lower, self.upper, values)
            else:
                self._key = (self.alphabet, self.arity, self.lower, self.upper,
                             self.entries, self.default)
        return self._key

    def __eq__(self, other):
        if not isinstance(other, AtomicFunction):
            return NotImplemented
        return self is other or self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return (f"AtomicFunction({self.name!r}, arity={self.arity}, "
                f"range=[{self.lower}, {self.upper}])")


def make_sequence_prob_atom(words: Iterable[Sequence[str]], alphabet: Sequence[str],
                            name: str | None = None) -> AtomicFunction:
    """Indicator atom of the set of length-n extensions of ``words``.

    ``n`` is the length of the longest word. Its semantics on a stationary
    chain is the probability of seeing one of ``words`` at a given time.
    """
    words = sorted({tuple(w) for w in words})
    if not words:
        raise SpecError("sequence probability needs at least one word")
    if any(len(w) == 0 for w in words):
        raise SpecError("sequence probability words must be non-empty")
    n = max(len(w) for w in words)
    known = set(alphabet)
    extended = set()
    for word in words:
        for token in word:
            if token not in known:
                raise SpecError(f"unknown observation {token!r} in P(...)")
        for tail in itertools.product(alphabet, repeat=n - len(word)):
            extended.add(word + tail)
    if name is None:
        name = "P(" + ", ".join(" ".join(w) for w in words) + ")"
    # Sorting by alphabet position keeps the table deterministic.
    order = {tok: i for i, tok in enumerate(alphabet)}
    entries = [(w, 1.0) for w in sorted(extended, key=lambda w: [order[t] for t in w])]
    return AtomicFunction(name, alphabet, n, 0.0, 1.0, entries, 0.0)


# ---------------------------------------------------------------------------
# Core quantitative nodes


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Atom:
    fn: AtomicFunction


@dataclass(frozen=True)
class Add:
    left: "QuantExpr"
    right: "QuantExpr"


@dataclass(frozen=True)
class Mul:
    left: "QuantExpr"
    right: "QuantExpr"


@dataclass(frozen=True)
class Inv:
    child: "QuantExpr"


QuantExpr = Union[Const, Atom, Add, Mul, Inv]

# ---------------------------------------------------------------------------
# Core qualitative nodes


@dataclass(frozen=True)
class TrueExpr:
    pass


@dataclass(frozen=True)
class Geq0:
    child: QuantExpr


@dataclass(frozen=True)
class Not:
    child: "QualExpr"


@dataclass(frozen=True)
class And:
    left: "QualExpr"
    right: "QualExpr"


QualExpr = Union[TrueExpr, Geq0, Not, And]

QUANT_NODES = (Const, Atom, Add, Mul, Inv)
QUAL_NODES = (TrueExpr, Geq0, Not, And)

# ---------------------------------------------------------------------------
# Surface-only nodes


@dataclass(frozen=True)
class Neg:
    child: object


@dataclass(frozen=True)
class Sub:
    left: object
    right: object


@dataclass(frozen=True)
class Div:
    left: object
    right: object


@dataclass(frozen=True)
class Compare:
    op: str  # one of >= <= = > <
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


@dataclass(frozen=True)
class Prob:
    """``P(S)`` or, with ``given`` set, ``P(S | T)``."""

    words: tuple[Word, ...]
    given: tuple[Word, ...] | None = None


@dataclass(frozen=True)
class Ref:
    name: str
    pos: tuple[int, int] | None = field(default=None, compare=False)


def make_conditional_expr(words: Iterable[Sequence[str]], given: Iterable[Sequence[str]],
                          alphabet: Sequence[str]) -> Mul:
    """``P(S | T)`` as ``P(TS) * inv(P(T))``."""
    words = [tuple(w) for w in words]
    given = [tuple(w) for w in given]
    if not words or not given:
        raise SpecError("conditional probability needs non-empty word sets")
    joint = [t + s for t in given for s in words]
    return Mul(Atom(make_sequence_prob_atom(joint, alphabet)),
               Inv(Atom(make_sequence_prob_atom(given, alphabet))))


MINUS_ONE = Const(-1.0)


def _negate(expr: QuantExpr) -> QuantExpr:
    if isinstance(expr, Const):
        return Const(-expr.value)
    return Mul(MINUS_ONE, expr)


def geq(lhs: QuantExpr, rhs: QuantExpr) -> Geq0:
    """``lhs >= rhs`` as ``Geq0(lhs - rhs)``; a literal zero right-hand side is already core."""
    if isinstance(rhs, Const) and rhs.value == 0:
        return Geq0(lhs)
    return Geq0(Add(lhs, Mul(MINUS_ONE, rhs)))


def leq(lhs: QuantExpr, rhs: QuantExpr) -> Geq0:
    return geq(Mul(MINUS_ONE, lhs), _negate(rhs))


def desugar(expr, alphabet: Sequence[str] | None = None,
            env: Mapping[str, object] | None = None):
    """Rewrite a surface expression into the core fragment.

    ``env`` resolves :class:`Ref` names to atoms or already-desugared
    expressions; ``alphabet`` is needed only for ``P(...)`` nodes. Core input is
    returned unchanged, so the rewrite is idempotent.
    """

    def go(e):
        if isinstance(e, (Const, TrueExpr)):
            return e
        if isinstance(e, Atom):
            return e
        if isinstance(e, Add):
            return Add(go(e.left), go(e.right))
        if isinstance(e, Mul):
            return Mul(go(e.left), go(e.right))
        if isinstance(e, Inv):
            return Inv(go(e.child))
        if isinstance(e, Geq0):
            return Geq0(go(e.child))
        if isinstance(e, Not):
            return Not(go(e.child))
        if isinstance(e, And):
            return And(go(e.left), go(e.right))
        if isinstance(e, Neg):
            return Mul(MINUS_ONE, go(e.child))
        if isinstance(e, Sub):
            return Add(go(e.left), Mul(MINUS_ONE, go(e.right)))
        if isinstance(e, Div):
            return Mul(go(e.left), Inv(go(e.right)))
        if isinstance(e, Or):
            return Not(And(Not(go(e.left)), Not(go(e.right))))
        if isinstance(e, Compare):
            lhs, rhs = go(e.left), go(e.right)
            if e.op == ">=":
                return geq(lhs, rhs)
            if e.op == "<=":
                return leq(lhs, rhs)
            if e.op == "=":
                return And(geq(lhs, rhs), leq(lhs, rhs))
            if e.op == ">":
                return Not(leq(lhs, rhs))
            if e.op == "<":
                return Not(geq(lhs, rhs))
            raise SpecError(f"unknown comparison {e.op!r}")
        if isinstance(e, Prob):
            if alphabet is None:
                raise SpecError("P(...) needs an alphabet")
            if e.given is None:
                return Atom(make_sequence_prob_atom(e.words, alphabet))
            return make_conditional_expr(e.words, e.given, alphabet)
        if isinstance(e, Ref):
            if env is None or e.name not in env:
                line, col = e.pos if e.pos else (None, None)
                raise SpecError(f"unknown identifier {e.name!r}", line, col)
            target = env[e.name]
            if isinstance(target, AtomicFunction):
                return Atom(target)
            return target
        raise TypeError(f"not an expression node: {e!r}")

    return go(expr)


def is_quant(expr) -> bool:
    return isinstance(expr, QUANT_NODES)


def is_qual(expr) -> bool:
    return isinstance(expr, QUAL_NODES)


def iter_nodes(expr) -> Iterator[object]:
    """Pre-order traversal of a core expression."""
    stack = [expr]
    while stack:
        e = stack.pop()
        yield e
        if isinstance(e, (Add, Mul, And)):
            stack.append(e.right)
            stack.append(e.left)
        elif isinstance(e, (Inv, Geq0, Not)):
            stack.append(e.child)


def collect_atoms(expr) -> list[AtomicFunction]:
    """Distinct atoms of ``expr`` in first-occurrence order, deduplicated structurally."""
    seen: dict[AtomicFunction, None] = {}
    for node in iter_nodes(expr):
        if isinstance(node, Atom) and node.fn not in seen:
            seen[node.fn] = None
    return list(seen)
