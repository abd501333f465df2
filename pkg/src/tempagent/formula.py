"""Formulas of the temporal agent-knowledge language: AST, parser, printer.

Concrete syntax::

    formula := impl
    impl    := until ("->" impl)?
    until   := or ("Until" or)*
    or      := and ("|" and)*
    and     := unary ("&" unary)*
    unary   := ("~" | "N" | "Today" | "KnI" | "Unc" | "K"INT | "D"INT) unary | atom
    atom    := "true" | "false" | "x"INT | "(" formula ")"

``D<k>`` is the k-step strict-future diamond, ``Unc`` the uncertainty operator.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union


class Formula:
    """Base class of all formula nodes. Nodes are immutable and hashable."""

    __slots__ = ()

    def children(self) -> tuple["Formula", ...]:
        return ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, slots=True)
class Var(Formula):
    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"variable index must be >= 1, got {self.index}")


@dataclass(frozen=True, slots=True)
class Top(Formula):
    pass


@dataclass(frozen=True, slots=True)
class Bot(Formula):
    pass


@dataclass(frozen=True, slots=True)
class Not(Formula):
    child: Formula

    def children(self):
        return (self.child,)


@dataclass(frozen=True, slots=True)
class Next(Formula):
    child: Formula

    def children(self):
        return (self.child,)


@dataclass(frozen=True, slots=True)
class Today(Formula):
    child: Formula

    def children(self):
        return (self.child,)


@dataclass(frozen=True, slots=True)
class KnI(Formula):
    child: Formula

    def children(self):
        return (self.child,)


@dataclass(frozen=True, slots=True)
class Unc(Formula):
    child: Formula

    def children(self):
        return (self.child,)


@dataclass(frozen=True, slots=True)
class K(Formula):
    agent: int
    child: Formula

    def __post_init__(self):
        if self.agent < 1:
            raise ValueError(f"agent index must be >= 1, got {self.agent}")

    def children(self):
        return (self.child,)


@dataclass(frozen=True, slots=True)
class Dist(Formula):
    k: int
    child: Formula

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"Dist index must be >= 0, got {self.k}")

    def children(self):
        return (self.child,)


@dataclass(frozen=True, slots=True)
class And(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True, slots=True)
class Or(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True, slots=True)
class Implies(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True, slots=True)
class Until(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


TOP = Top()
BOT = Bot()

UNARY = (Not, Next, Today, KnI, Unc, K, Dist)
BINARY = (And, Or, Implies, Until)
Binary = Union[And, Or, Implies, Until]


# -- structure ---------------------------------------------------------------

def iter_nodes(f: Formula) -> Iterator[Formula]:
    """Pre-order traversal, duplicates included."""
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(g.children()))


def subformulas(f: Formula) -> list[Formula]:
    """Distinct subtrees of `f`, children before parents, `f` last."""
    seen: dict[Formula, None] = {}

    def visit(g: Formula) -> None:
        if g in seen:
            return
        for c in g.children():
            visit(c)
        seen[g] = None

    visit(f)
    return list(seen)


@dataclass(frozen=True)
class FormulaMetrics:
    variables_used: frozenset[int]
    max_agent: int
    dist_weight: int
    next_count: int
    until_count: int
    size: int


def metrics(f: Formula) -> FormulaMetrics:
    variables = set()
    max_agent = dist_weight = next_count = until_count = size = 0
    for g in iter_nodes(f):
        size += 1
        if isinstance(g, Var):
            variables.add(g.index)
        elif isinstance(g, K):
            max_agent = max(max_agent, g.agent)
        elif isinstance(g, Dist):
            dist_weight += g.k
        elif isinstance(g, Next):
            next_count += 1
        elif isinstance(g, Until):
            until_count += 1
    return FormulaMetrics(frozenset(variables), max_agent, dist_weight,
                          next_count, until_count, size)


def variables(f: Formula) -> list[int]:
    return sorted({g.index for g in iter_nodes(f) if isinstance(g, Var)})


def conj(formulas) -> Formula:
    """Left-nested conjunction; `true` for an empty sequence."""
    result = None
    for g in formulas:
        result = g if result is None else And(result, g)
    return TOP if result is None else result


# -- printing ----------------------------------------------------------------

_BINARY_TOKEN = {And: "&", Or: "|", Implies: "->", Until: "Until"}
_UNARY_TOKEN = {Next: "N", Today: "Today", KnI: "KnI", Unc: "Unc"}


def _unary_prefix(f: Formula) -> str:
    if isinstance(f, Not):
        return "~"
    if isinstance(f, K):
        return f"K{f.agent} "
    if isinstance(f, Dist):
        return f"D{f.k} "
    return _UNARY_TOKEN[type(f)] + " "


def to_text(f: Formula) -> str:
    """Canonical concrete syntax. Binary children are parenthesized unless
    they repeat the parent operator on its associative side."""
    if isinstance(f, Var):
        return f"x{f.index}"
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bot):
        return "false"
    if isinstance(f, UNARY):
        child = f.children()[0]
        inner = to_text(child)
        if isinstance(child, BINARY):
            inner = f"({inner})"
        return _unary_prefix(f) + inner
    op = type(f)
    left, right = to_text(f.left), to_text(f.right)
    # '->' associates to the right, everything else to the left
    if isinstance(f.left, BINARY) and (op is Implies or type(f.left) is not op):
        left = f"({left})"
    if isinstance(f.right, BINARY) and (op is not Implies or type(f.right) is not op):
        right = f"({right})"
    return f"{left} {_BINARY_TOKEN[op]} {right}"


# -- parsing -----------------------------------------------------------------

class ParseError(ValueError):
    """Syntax error with 1-based line/column and the set of expected tokens."""

    def __init__(self, message: str, line: int, column: int, expected=()):
        self.message = message
        self.line = line
        self.column = column
        self.expected = tuple(sorted(expected))
        text = f"line {line}, column {column}: {message}"
        if self.expected:
            text += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(text)


_TOKEN_RE = re.compile(r"\s+|->|[~&|()]|[A-Za-z_][A-Za-z0-9_]*|.", re.S)
_KEYWORDS = {"true", "false", "N", "Until", "Today", "KnI", "Unc"}

_ATOM_START = {"true", "false", "x<n>", "("}
_UNARY_START = {"~", "N", "Today", "KnI", "Unc", "K<n>", "D<n>"}


@dataclass(frozen=True)
class Token:
    kind: str  # 'op', 'kw', 'var', 'K', 'D', 'eof'
    text: str
    value: int
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, col = 1, 1
    for m in _TOKEN_RE.finditer(text):
        s = m.group()
        if s.isspace():
            pass
        elif s in ("->", "~", "&", "|", "(", ")"):
            tokens.append(Token("op", s, 0, line, col))
        elif s[0].isalpha() or s[0] == "_":
            tokens.append(_classify_word(s, line, col))
        else:
            raise ParseError(f"unexpected character {s!r}", line, col)
        nl = s.count("\n")
        if nl:
            line += nl
            col = len(s) - s.rfind("\n")
        else:
            col += len(s)
    tokens.append(Token("eof", "", 0, line, col))
    return tokens


def _classify_word(s: str, line: int, col: int) -> Token:
    if s in _KEYWORDS:
        return Token("kw", s, 0, line, col)
    head, digits = s[0], s[1:]
    if head in "xKD" and digits.isdigit() and digits.isascii():
        n = int(digits)
        if head == "x":
            if n < 1:
                raise ParseError(f"variable index must be positive in {s!r}", line, col)
            return Token("var", s, n, line, col)
        if head == "K":
            if n < 1:
                raise ParseError(f"agent index 0 is not allowed in {s!r}", line, col)
            return Token("K", s, n, line, col)
        return Token("D", s, n, line, col)
    if head == "D":
        raise ParseError(f"malformed Dist index in {s!r}", line, col)
    if head == "K":
        raise ParseError(f"malformed agent index in {s!r}", line, col)
    if head == "x":
        raise ParseError(f"malformed variable in {s!r}", line, col)
    raise ParseError(f"unknown word {s!r}", line, col, _ATOM_START | _UNARY_START)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def fail(self, expected) -> ParseError:
        t = self.tok
        got = "end of input" if t.kind == "eof" else repr(t.text)
        return ParseError(f"unexpected {got}", t.line, t.column, expected)

    def formula(self) -> Formula:
        return self.impl()

    def impl(self) -> Formula:
        left = self.until()
        if self.at("->"):
            self.pos += 1
            return Implies(left, self.impl())
        return left

    def until(self) -> Formula:
        left = self.disj()
        while self.at("Until"):
            self.pos += 1
            left = Until(left, self.disj())
        return left

    def disj(self) -> Formula:
        left = self.conj()
        while self.at("|"):
            self.pos += 1
            left = Or(left, self.conj())
        return left

    def conj(self) -> Formula:
        left = self.unary()
        while self.at("&"):
            self.pos += 1
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        t = self.tok
        if self.at("~"):
            self.pos += 1
            return Not(self.unary())
        if t.kind == "kw" and t.text in ("N", "Today", "KnI", "Unc"):
            self.pos += 1
            cls = {"N": Next, "Today": Today, "KnI": KnI, "Unc": Unc}[t.text]
            return cls(self.unary())
        if t.kind == "K":
            self.pos += 1
            return K(t.value, self.unary())
        if t.kind == "D":
            self.pos += 1
            return Dist(t.value, self.unary())
        return self.atom()

    def atom(self) -> Formula:
        t = self.tok
        if t.kind == "var":
            self.pos += 1
            return Var(t.value)
        if self.at("true"):
            self.pos += 1
            return TOP
        if self.at("false"):
            self.pos += 1
            return BOT
        if self.at("("):
            self.pos += 1
            f = self.formula()
            if not self.at(")"):
                raise self.fail({")", "&", "|", "->", "Until"})
            self.pos += 1
            return f
        raise self.fail(_ATOM_START | _UNARY_START)


def parse(text: str) -> Formula:
    """Parse concrete syntax into a formula; raises ParseError."""
    p = _Parser(tokenize(text))
    f = p.formula()
    if p.tok.kind != "eof":
        raise p.fail({"&", "|", "->", "Until", "end of input"})
    return f
