"""Formula ASTs, the text grammar, and structural transformations.

One grammar serves both interpretations: a formula text is parsed either in
``robust`` flavor (temporal operators read as their robust variants) or in
``classical`` flavor (plain LTL).  The flavor is recorded on the formula
root; operator tokens are shared.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

ROBUST = "robust"
CLASSICAL = "classical"

_IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_KEYWORDS = {"true", "false", "G", "F", "X", "U", "R"}


class FormulaError(ValueError):
    """Base class for formula construction and parsing errors."""


class ParseError(FormulaError):
    """Syntax error at a known character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownPropositionError(FormulaError):
    """An atom outside the declared alphabet."""

    def __init__(self, name: str, position: int):
        super().__init__(f"unknown proposition '{name}' (at position {position})")
        self.name = name
        self.position = position


def validate_proposition(name: str) -> str:
    """Check a proposition name: ASCII letter, then letters/digits/underscore."""
    if not _IDENT_RE.fullmatch(name) or name in _KEYWORDS:
        raise FormulaError(f"invalid proposition name: {name!r}")
    return name


class Node:
    """Base class of AST nodes; subclasses are frozen and hashable."""

    __slots__ = ()


@dataclass(frozen=True)
class Atom(Node):
    name: str


@dataclass(frozen=True)
class TrueConst(Node):
    pass


@dataclass(frozen=True)
class FalseConst(Node):
    pass


@dataclass(frozen=True)
class Not(Node):
    operand: Node


@dataclass(frozen=True)
class And(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Or(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Implies(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Next(Node):
    operand: Node


@dataclass(frozen=True)
class Until(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Release(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Eventually(Node):
    operand: Node


@dataclass(frozen=True)
class Always(Node):
    operand: Node


@dataclass(frozen=True)
class Formula:
    """An AST with the flavor under which its temporal operators are read."""

    root: Node
    flavor: str

    def __post_init__(self):
        if self.flavor not in (ROBUST, CLASSICAL):
            raise FormulaError(f"unknown flavor: {self.flavor!r}")

    def __str__(self) -> str:
        return format_formula(self)

    @property
    def atoms(self) -> frozenset[str]:
        return atoms_of(self.root)

    @property
    def size(self) -> int:
        """Number of distinct subformulas (structural sharing via hashing)."""
        seen: set[Node] = set()

        def walk(node: Node) -> None:
            if node in seen:
                return
            seen.add(node)
            for child in children(node):
                walk(child)

        walk(self.root)
        return len(seen)


def children(node: Node) -> tuple[Node, ...]:
    if isinstance(node, (Not, Next, Eventually, Always)):
        return (node.operand,)
    if isinstance(node, (And, Or, Implies, Until, Release)):
        return (node.left, node.right)
    return ()


def atoms_of(node: Node) -> frozenset[str]:
    if isinstance(node, Atom):
        return frozenset({node.name})
    out: frozenset[str] = frozenset()
    for child in children(node):
        out |= atoms_of(child)
    return out


def reinterpret(formula: Formula, flavor: str) -> Formula:
    """Read the same operator tree under the other flavor."""
    return Formula(formula.root, flavor)


# --------------------------------------------------------------------------
# Parsing.
#
# formula := impl
# impl    := or ("->" impl)?
# or      := and ("|" and)*
# and     := until ("&" until)*
# until   := unary (("U" | "R") until)?
# unary   := ("!" | "X" | "F" | "G") unary | atom
# atom    := "true" | "false" | IDENT | "(" formula ")"
# --------------------------------------------------------------------------


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind: str, text: str, pos: int):
        self.kind = kind
        self.text = text
        self.pos = pos


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if text.startswith("->", i):
            tokens.append(_Token("->", "->", i))
            i += 2
            continue
        if c in "!&|()":
            tokens.append(_Token(c, c, i))
            i += 1
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            word = m.group(0)
            kind = word if word in _KEYWORDS else "ident"
            tokens.append(_Token(kind, word, i))
            i = m.end()
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], alphabet: frozenset[str] | None):
        self.tokens = tokens
        self.pos = 0
        self.alphabet = alphabet

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def parse_formula(self) -> Node:
        return self.parse_impl()

    def parse_impl(self) -> Node:
        left = self.parse_or()
        if self.peek().kind == "->":
            self.advance()
            return Implies(left, self.parse_impl())
        return left

    def parse_or(self) -> Node:
        node = self.parse_and()
        while self.peek().kind == "|":
            self.advance()
            node = Or(node, self.parse_and())
        return node

    def parse_and(self) -> Node:
        node = self.parse_until()
        while self.peek().kind == "&":
            self.advance()
            node = And(node, self.parse_until())
        return node

    def parse_until(self) -> Node:
        left = self.parse_unary()
        kind = self.peek().kind
        if kind in ("U", "R"):
            self.advance()
            right = self.parse_until()
            return Until(left, right) if kind == "U" else Release(left, right)
        return left

    def parse_unary(self) -> Node:
        tok = self.peek()
        if tok.kind == "!":
            self.advance()
            return Not(self.parse_unary())
        if tok.kind == "X":
            self.advance()
            return Next(self.parse_unary())
        if tok.kind == "F":
            self.advance()
            return Eventually(self.parse_unary())
        if tok.kind == "G":
            self.advance()
            return Always(self.parse_unary())
        return self.parse_atom()

    def parse_atom(self) -> Node:
        tok = self.advance()
        if tok.kind == "true":
            return TrueConst()
        if tok.kind == "false":
            return FalseConst()
        if tok.kind == "ident":
            if self.alphabet is not None and tok.text not in self.alphabet:
                raise UnknownPropositionError(tok.text, tok.pos)
            return Atom(tok.text)
        if tok.kind == "(":
            node = self.parse_formula()
            closing = self.advance()
            if closing.kind != ")":
                raise ParseError("expected ')'", closing.pos)
            return node
        raise ParseError(f"expected a formula, found {tok.text or 'end of input'!r}", tok.pos)


def parse(text: str, alphabet: set[str] | frozenset[str] | None = None,
          flavor: str = ROBUST) -> Formula:
    """Parse a formula text under the given flavor.

    With an explicit alphabet, atoms outside it raise UnknownPropositionError.
    """
    tokens = _tokenize(text)
    parser = _Parser(tokens, frozenset(alphabet) if alphabet is not None else None)
    root = parser.parse_formula()
    trailing = parser.peek()
    if trailing.kind != "end":
        raise ParseError(f"unexpected trailing input {trailing.text!r}", trailing.pos)
    return Formula(root, flavor)


# --------------------------------------------------------------------------
# Printing with minimal parentheses; parse(format_formula(f)) == f.
# --------------------------------------------------------------------------

_LEVEL_IMPL = 0
_LEVEL_OR = 1
_LEVEL_AND = 2
_LEVEL_UNTIL = 3
_LEVEL_UNARY = 4
_LEVEL_ATOM = 5


def _level(node: Node) -> int:
    if isinstance(node, Implies):
        return _LEVEL_IMPL
    if isinstance(node, Or):
        return _LEVEL_OR
    if isinstance(node, And):
        return _LEVEL_AND
    if isinstance(node, (Until, Release)):
        return _LEVEL_UNTIL
    if isinstance(node, (Not, Next, Eventually, Always)):
        return _LEVEL_UNARY
    return _LEVEL_ATOM


_UNARY_TOKEN = {Not: "!", Next: "X ", Eventually: "F ", Always: "G "}


def _fmt(node: Node, min_level: int) -> str:
    level = _level(node)
    if isinstance(node, Atom):
        text = node.name
    elif isinstance(node, TrueConst):
        text = "true"
    elif isinstance(node, FalseConst):
        text = "false"
    elif isinstance(node, (Not, Next, Eventually, Always)):
        text = _UNARY_TOKEN[type(node)] + _fmt(node.operand, _LEVEL_UNARY)
    elif isinstance(node, (Until, Release)):
        op = "U" if isinstance(node, Until) else "R"
        # right-associative: the left operand needs strictly tighter binding
        text = f"{_fmt(node.left, _LEVEL_UNARY)} {op} {_fmt(node.right, _LEVEL_UNTIL)}"
    elif isinstance(node, And):
        text = f"{_fmt(node.left, _LEVEL_AND)} & {_fmt(node.right, _LEVEL_AND + 1)}"
    elif isinstance(node, Or):
        text = f"{_fmt(node.left, _LEVEL_OR)} | {_fmt(node.right, _LEVEL_OR + 1)}"
    elif isinstance(node, Implies):
        text = f"{_fmt(node.left, _LEVEL_OR)} -> {_fmt(node.right, _LEVEL_IMPL)}"
    else:  # pragma: no cover
        raise TypeError(f"unknown node type: {node!r}")
    if level < min_level:
        return f"({text})"
    return text


def format_formula(formula: Formula) -> str:
    return _fmt(formula.root, _LEVEL_IMPL)


# --------------------------------------------------------------------------
# Structural transformations.
# --------------------------------------------------------------------------


def rewrite_implications(formula: Formula) -> Formula:
    """Replace every implication left -> right by !left | right."""

    def walk(node: Node) -> Node:
        if isinstance(node, Implies):
            return Or(Not(walk(node.left)), walk(node.right))
        return _rebuild(node, [walk(c) for c in children(node)])

    return Formula(walk(formula.root), formula.flavor)


def desugar(formula: Formula) -> Formula:
    """Expand F into U and G into R: F p becomes true U p, G p becomes false R p."""

    def walk(node: Node) -> Node:
        if isinstance(node, Eventually):
            return Until(TrueConst(), walk(node.operand))
        if isinstance(node, Always):
            return Release(FalseConst(), walk(node.operand))
        return _rebuild(node, [walk(c) for c in children(node)])

    return Formula(walk(formula.root), formula.flavor)


def fragment_of(formula: Formula) -> str:
    """Classify a robust formula: 'release_free' iff no R node occurs.

    The classification is syntactic; F and G do not count as release even
    though G desugars to one.
    """
    if formula.flavor != ROBUST:
        raise FormulaError("fragment classification applies to robust formulas")

    def has_release(node: Node) -> bool:
        if isinstance(node, Release):
            return True
        return any(has_release(c) for c in children(node))

    return "full" if has_release(formula.root) else "release_free"


def _rebuild(node: Node, new_children: list[Node]) -> Node:
    if not new_children:
        return node
    cls = type(node)
    if len(new_children) == 1:
        return cls(new_children[0])
    return cls(new_children[0], new_children[1])
