"""Specification files: lexer, recursive-descent parser and pretty-printer.

A specification file looks like::

    # demographic parity on the lending model
    alphabet: S A B Y N
    atom approved arity 2 range 0 1 { "* Y" -> 1; default 0 }
    define dp = P("Y" | "A") - P("Y" | "B")
    delta: 0.05
    taumix: 170589.78
    quant: dp

Statements may appear in any order, but a ``define`` may only use atoms and
earlier defines. Exactly one ``quant:`` or ``qual:`` statement is required.
``#`` starts a comment that runs to the end of the line.

Expression grammar, loosest binding first::

    qual    := conj ('||' conj)*
    conj    := neg ('&&' neg)*
    neg     := '!' neg | 'true' | 'false' | quant CMP quant | '(' qual ')'
    quant   := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | primary
    primary := NUMBER | IDENT | 'inv' '(' quant ')' | '(' quant ')'
             | 'P' '(' words ['|' words] ')'
    words   := STRING (',' STRING)*
    CMP     := '>=' | '<=' | '=' | '>' | '<'

A minus sign directly in front of a number literal is folded into the constant.
Words inside ``P(...)`` and atom tables are quoted, space-separated tokens; in
atom tables one position may be the wildcard ``*``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

from .ast import (
    Add, And, Atom, AtomicFunction, Compare, Const, Div, Geq0, Inv, Mul, Neg, Not, Or,
    Prob, QualExpr, QuantExpr, Ref, SpecError, Sub, TrueExpr, _check_token, collect_atoms,
    desugar, is_qual, is_quant,
)

KEYWORDS = frozenset({
    "alphabet", "atom", "arity", "range", "default", "define", "delta", "taumix",
    "quant", "qual", "true", "false", "inv", "P",
})

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_PUNCT = ("->", ">=", "<=", "&&", "||", "+", "-", "*", "/", "(", ")", "{", "}", ";", ":",
          ",", "|", "=", ">", "<", "!")


@dataclass
class Token:
    kind: str  # IDENT NUMBER STRING WORDS PUNCT EOF
    text: str
    line: int
    col: int
    value: object = None


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, i = 1, 0, 0
    n = len(text)
    while i < n:
        c = text[i]
        col = i - line_start + 1
        if c == "\n":
            line += 1
            line_start = i + 1
            i += 1
        elif c.isspace():
            i += 1
        elif c == "#":
            while i < n and text[i] != "\n":
                i += 1
        elif c == '"':
            j = text.find('"', i + 1)
            nl = text.find("\n", i + 1)
            if j < 0 or (0 <= nl < j):
                raise SpecError("unterminated string", line, col)
            raw = text[i + 1:j]
            tokens.append(Token("STRING", raw, line, col, tuple(raw.split())))
            i = j + 1
        elif c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            m = _NUMBER.match(text, i)
            tokens.append(Token("NUMBER", m.group(), line, col, float(m.group())))
            i = m.end()
        elif c.isalpha() or c == "_":
            m = _IDENT.match(text, i)
            word = m.group()
            tokens.append(Token("IDENT", word, line, col))
            i = m.end()
            if word == "alphabet":
                # The alphabet line is raw: tokens like (A,1) are not lexed.
                j = i
                while j < n and text[j] in " \t":
                    j += 1
                if j < n and text[j] == ":":
                    tokens.append(Token("PUNCT", ":", line, j - line_start + 1))
                    end = text.find("\n", j)
                    end = n if end < 0 else end
                    rest = text[j + 1:end]
                    rest = rest.split("#", 1)[0]
                    tokens.append(Token("WORDS", rest, line, j - line_start + 2,
                                        tuple(rest.split())))
                    i = end
        else:
            for p in _PUNCT:
                if text.startswith(p, i):
                    tokens.append(Token("PUNCT", p, line, col))
                    i += len(p)
                    break
            else:
                raise SpecError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("EOF", "", line, i - line_start + 1))
    return tokens


@dataclass(eq=False)
class SpecDocument:
    """A validated specification with all sugar expanded.

    ``atoms`` lists every atom of the document (declared or generated by
    ``P(...)``), deduplicated structurally. Equality is structural.
    """

    alphabet: tuple[str, ...]
    root: QuantExpr | QualExpr
    delta: float
    tau_mix: float
    atoms: tuple[AtomicFunction, ...] = ()
    source: str | None = field(default=None, repr=False)

    def __post_init__(self):
        self.alphabet = tuple(self.alphabet)
        if not self.alphabet:
            raise SpecError("alphabet must not be empty")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise SpecError("alphabet tokens must be unique")
        for tok in self.alphabet:
            _check_token(tok)
        if not (is_quant(self.root) or is_qual(self.root)):
            raise SpecError("root must be a core quant or qual expression")
        self.delta = float(self.delta)
        self.tau_mix = float(self.tau_mix)
        if not 0.0 < self.delta < 1.0:
            raise SpecError(f"delta must lie in (0, 1), got {self.delta}")
        if not (math.isfinite(self.tau_mix) and self.tau_mix > 0):
            raise SpecError(f"taumix must be positive, got {self.tau_mix}")
        merged = dict.fromkeys(self.atoms)
        for fn in collect_atoms(self.root):
            merged.setdefault(fn, None)
        for fn in merged:
            if fn.alphabet != self.alphabet:
                raise SpecError(f"atom {fn.name!r} is defined over a different alphabet")
        self.atoms = tuple(merged)

    @property
    def kind(self) -> str:
        return "quant" if is_quant(self.root) else "qual"

    def __eq__(self, other):
        if not isinstance(other, SpecDocument):
            return NotImplemented
        return (self.alphabet == other.alphabet and self.root == other.root
                and self.delta == other.delta and self.tau_mix == other.tau_mix
                and self.atoms == other.atoms)

    def with_params(self, delta: float | None = None, tau_mix: float | None = None) -> "SpecDocument":
        return SpecDocument(self.alphabet, self.root,
                            self.delta if delta is None else delta,
                            self.tau_mix if tau_mix is None else tau_mix,
                            self.atoms, self.source)


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str, tok: Token | None = None) -> SpecError:
        tok = tok or self.tok
        return SpecError(message, tok.line, tok.col)

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.tok
        return tok.kind in ("PUNCT", "IDENT") and tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what}, found {found!r}")
        return self.advance()

    def signed_number(self) -> float:
        sign = 1.0
        if self.at("-"):
            self.advance()
            sign = -1.0
        return sign * self.expect_kind("NUMBER", "a number").value

    def integer(self) -> int:
        tok = self.expect_kind("NUMBER", "an integer")
        if not re.fullmatch(r"\d+", tok.text):
            raise self.error("expected an integer", tok)
        return int(tok.text)

    # -- statements --------------------------------------------------------

    def document(self, delta=None, tau_mix=None) -> SpecDocument:
        alphabet = None
        atom_decls: list[tuple[Token, str, int, float, float, list, float]] = []
        defines: list[tuple[Token, str, object]] = []
        params: dict[str, tuple[Token, float]] = {}
        root = None
        while self.tok.kind != "EOF":
            tok = self.tok
            if tok.kind != "IDENT":
                raise self.error(f"expected a statement, found {tok.text!r}")
            kw = tok.text
            if kw == "alphabet":
                self.advance()
                self.expect(":")
                words = self.expect_kind("WORDS", "alphabet tokens")
                if alphabet is not None:
                    raise self.error("duplicate alphabet declaration", tok)
                if not words.value:
                    raise self.error("alphabet must not be empty", words)
                try:
                    for t in words.value:
                        _check_token(t)
                except SpecError as err:
                    raise self.error(err.message, words) from None
                if len(set(words.value)) != len(words.value):
                    raise self.error("alphabet tokens must be unique", words)
                alphabet = words.value
            elif kw == "atom":
                atom_decls.append(self.atom_decl())
            elif kw == "define":
                self.advance()
                name_tok = self.expect_kind("IDENT", "a name")
                self.expect("=")
                defines.append((name_tok, name_tok.text, self.quant()))
            elif kw in ("delta", "taumix"):
                self.advance()
                self.expect(":")
                if kw in params:
                    raise self.error(f"duplicate {kw} declaration", tok)
                params[kw] = (tok, self.signed_number())
            elif kw in ("quant", "qual"):
                self.advance()
                self.expect(":")
                if root is not None:
                    raise self.error("only one quant: or qual: statement is allowed", tok)
                expr = self.quant() if kw == "quant" else self.qual()
                root = (tok, kw, expr)
            else:
                raise self.error(f"unknown statement {kw!r}")

        if alphabet is None:
            raise SpecError("missing alphabet declaration")
        if root is None:
            raise SpecError("missing quant: or qual: statement")

        env: dict[str, object] = {}
        declared = []
        for tok, name, arity, lo, hi, entries, default in atom_decls:
            if name in env:
                raise self.error(f"duplicate identifier {name!r}", tok)
            try:
                fn = AtomicFunction(name, alphabet, arity, lo, hi, entries, default)
            except SpecError as err:
                raise self.error(err.message, tok) from None
            env[name] = fn
            declared.append(fn)
        for tok, name, expr in defines:
            if name in env:
                raise self.error(f"duplicate identifier {name!r}", tok)
            env[name] = self.resolve(expr, alphabet, env, tok)
        tok, kind, expr = root
        core = self.resolve(expr, alphabet, env, tok)

        if delta is None:
            if "delta" not in params:
                raise SpecError("missing delta (declare it or pass it explicitly)")
            delta = params["delta"][1]
        if tau_mix is None:
            if "taumix" not in params:
                raise SpecError("missing taumix (declare it or pass it explicitly)")
            tau_mix = params["taumix"][1]
        try:
            return SpecDocument(alphabet, core, delta, tau_mix, tuple(declared))
        except SpecError as err:
            which = "taumix" if "taumix" in err.message else "delta"
            if which in params:
                raise self.error(err.message, params[which][0]) from None
            raise

    def resolve(self, expr, alphabet, env, tok):
        try:
            return desugar(expr, alphabet, env)
        except SpecError as err:
            if err.line is not None:
                raise
            raise self.error(err.message, tok) from None

    def atom_decl(self):
        start = self.expect("atom")
        name_tok = self.expect_kind("IDENT", "an atom name")
        if name_tok.text in KEYWORDS:
            raise self.error(f"{name_tok.text!r} is a reserved word", name_tok)
        self.expect("arity")
        arity = self.integer()
        self.expect("range")
        lo = self.signed_number()
        hi = self.signed_number()
        self.expect("{")
        entries = []
        default = None
        while not self.at("}"):
            if self.at("default"):
                dtok = self.advance()
                if default is not None:
                    raise self.error("duplicate default", dtok)
                default = self.signed_number()
            else:
                word = self.expect_kind("STRING", "a quoted word or 'default'")
                self.expect("->")
                entries.append((word.value, self.signed_number()))
            if self.at(";"):
                self.advance()
            elif not self.at("}"):
                raise self.error("expected ';' or '}'")
        self.expect("}")
        if default is None:
            raise self.error(f"atom {name_tok.text!r} needs a default value", start)
        return (name_tok, name_tok.text, arity, lo, hi, entries, default)

    # -- expressions -------------------------------------------------------

    def qual(self):
        left = self.conj()
        while self.at("||"):
            self.advance()
            left = Or(left, self.conj())
        return left

    def conj(self):
        left = self.neg()
        while self.at("&&"):
            self.advance()
            left = And(left, self.neg())
        return left

    def neg(self):
        if self.at("!"):
            self.advance()
            return Not(self.neg())
        if self.at("true"):
            self.advance()
            return TrueExpr()
        if self.at("false"):
            self.advance()
            return Not(TrueExpr())
        if self.at("("):
            # Either a parenthesized qual or a comparison starting with '('.
            saved = self.pos
            try:
                return self.comparison()
            except SpecError:
                self.pos = saved
            self.advance()
            inner = self.qual()
            self.expect(")")
            return inner
        return self.comparison()

    def comparison(self):
        left = self.quant()
        tok = self.tok
        if tok.kind == "PUNCT" and tok.text in (">=", "<=", "=", ">", "<"):
            self.advance()
            return Compare(tok.text, left, self.quant())
        raise self.error("expected a comparison operator (>=, <=, =, >, <)")

    def quant(self):
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            right = self.term()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term(self):
        left = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance().text
            right = self.unary()
            left = Mul(left, right) if op == "*" else Div(left, right)
        return left

    def unary(self):
        if self.at("-"):
            self.advance()
            if self.tok.kind == "NUMBER":
                return Const(-self.advance().value)
            return Neg(self.unary())
        return self.primary()

    def primary(self):
        tok = self.tok
        if tok.kind == "NUMBER":
            self.advance()
            return Const(tok.value)
        if self.at("("):
            self.advance()
            inner = self.quant()
            self.expect(")")
            return inner
        if self.at("inv"):
            self.advance()
            self.expect("(")
            inner = self.quant()
            self.expect(")")
            return Inv(inner)
        if self.at("P"):
            self.advance()
            self.expect("(")
            words = self.words()
            given = None
            if self.at("|"):
                self.advance()
                given = self.words()
            self.expect(")")
            return Prob(words, given)
        if tok.kind == "IDENT":
            if tok.text in KEYWORDS:
                raise self.error(f"unexpected keyword {tok.text!r}")
            self.advance()
            return Ref(tok.text, (tok.line, tok.col))
        found = tok.text or "end of input"
        raise self.error(f"expected an expression, found {found!r}")

    def words(self):
        out = []
        while True:
            tok = self.expect_kind("STRING", "a quoted word")
            if not tok.value:
                raise self.error("empty word", tok)
            out.append(tok.value)
            if not self.at(","):
                return tuple(out)
            self.advance()


def parse_spec(text: str, delta: float | None = None, tau_mix: float | None = None) -> SpecDocument:
    """Parse and validate a specification; explicit ``delta``/``tau_mix`` override the file."""
    doc = _Parser(text).document(delta, tau_mix)
    doc.source = text
    return doc


# ---------------------------------------------------------------------------
# Pretty-printer


def _num(x: float) -> str:
    return repr(float(x))


def _word(word: Sequence[str]) -> str:
    return '"' + " ".join(word) + '"'


def format_expr(expr, names: dict[AtomicFunction, str]) -> str:
    """Fully parenthesized surface form of a core expression."""
    if isinstance(expr, Const):
        s = _num(expr.value)
        return f"({s})" if s.startswith("-") else s
    if isinstance(expr, Atom):
        return names[expr.fn]
    if isinstance(expr, Add):
        return f"({format_expr(expr.left, names)} + {format_expr(expr.right, names)})"
    if isinstance(expr, Mul):
        return f"({format_expr(expr.left, names)} * {format_expr(expr.right, names)})"
    if isinstance(expr, Inv):
        return f"inv({format_expr(expr.child, names)})"
    if isinstance(expr, TrueExpr):
        return "true"
    if isinstance(expr, Geq0):
        return f"({format_expr(expr.child, names)} >= 0)"
    if isinstance(expr, Not):
        return f"!{format_expr(expr.child, names)}"
    if isinstance(expr, And):
        return f"({format_expr(expr.left, names)} && {format_expr(expr.right, names)})"
    raise TypeError(f"not a core expression: {expr!r}")


def atom_names(atoms: Sequence[AtomicFunction]) -> dict[AtomicFunction, str]:
    names: dict[AtomicFunction, str] = {}
    used: set[str] = set()
    for i, fn in enumerate(atoms):
        name = fn.name
        if not _IDENT.fullmatch(name) or name in KEYWORDS or name in used:
            name = f"_atom{i}"
            while name in used:
                name += "_"
        used.add(name)
        names[fn] = name
    return names


def format_spec(doc: SpecDocument) -> str:
    """Print a document in the file syntax; ``parse_spec`` of the result equals ``doc``."""
    names = atom_names(doc.atoms)
    lines = ["alphabet: " + " ".join(doc.alphabet)]
    for fn in doc.atoms:
        body = [f"{_word(w)} -> {_num(v)}" for w, v in fn.entries]
        body.append(f"default {_num(fn.default)}")
        lines.append(f"atom {names[fn]} arity {fn.arity} range {_num(fn.lower)} {_num(fn.upper)} "
                     "{ " + "; ".join(body) + " }")
    lines.append(f"delta: {_num(doc.delta)}")
    lines.append(f"taumix: {_num(doc.tau_mix)}")
    lines.append(f"{doc.kind}: {format_expr(doc.root, names)}")
    return "\n".join(lines) + "\n"
