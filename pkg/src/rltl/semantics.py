"""Truth-value lattices and exact evaluation over ultimately periodic words.

This module is the semantic ground truth for the whole pipeline: robust
formulas evaluate to one of five monotone four-bit truth values, and both
the direct recursive definition and the four-bit translation to classical
LTL are implemented here so each can check the other.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

from .syntax import (
    CLASSICAL,
    ROBUST,
    Always,
    And,
    Atom,
    Eventually,
    FalseConst,
    Formula,
    FormulaError,
    Implies,
    Next,
    Node,
    Not,
    Or,
    Release,
    TrueConst,
    Until,
)

Letter = frozenset

_CELLS = ("0", "?", "1")


class TruthValue(enum.IntEnum):
    """The five monotone degrees, ordered T0000 < T0001 < ... < T1111."""

    T0000 = 0
    T0001 = 1
    T0011 = 2
    T0111 = 3
    T1111 = 4

    def bit(self, i: int) -> int:
        """The i-th bit (1-indexed); bits are monotone nondecreasing."""
        return 1 if self.value >= 5 - i else 0

    @property
    def bits(self) -> tuple[int, int, int, int]:
        return (self.bit(1), self.bit(2), self.bit(3), self.bit(4))

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "TruthValue":
        bits = tuple(bits)
        if len(bits) != 4 or any(b not in (0, 1) for b in bits):
            raise ValueError(f"need four bits, got {bits!r}")
        if any(a > b for a, b in zip(bits, bits[1:])):
            raise ValueError(f"bits must be monotone nondecreasing: {bits!r}")
        return cls(sum(bits))

    @classmethod
    def from_string(cls, text: str) -> "TruthValue":
        return cls.from_bits(int(c) for c in text)


def truth_value_leq(x: TruthValue, y: TruthValue) -> bool:
    """Total-order comparison of truth values."""
    return x <= y


@dataclass(frozen=True)
class Verdict4:
    """A monitor verdict: four cells over {0, ?, 1} of shape 0* ?* 1*."""

    cells: str

    def __post_init__(self):
        if len(self.cells) != 4 or any(c not in _CELLS for c in self.cells):
            raise ValueError(f"need four cells over 0/?/1, got {self.cells!r}")
        order = [_CELLS.index(c) for c in self.cells]
        if any(a > b for a, b in zip(order, order[1:])):
            raise ValueError(f"verdict must have shape 0*?*1*: {self.cells!r}")

    def cell(self, i: int) -> str:
        """The i-th cell, 1-indexed."""
        return self.cells[i - 1]

    @property
    def is_all_unknown(self) -> bool:
        return self.cells == "????"

    def __str__(self) -> str:
        return self.cells


@dataclass(frozen=True)
class Verdict3:
    """A classical three-valued monitor verdict: one cell over {0, ?, 1}."""

    cell: str

    def __post_init__(self):
        if self.cell not in _CELLS:
            raise ValueError(f"need one cell over 0/?/1, got {self.cell!r}")

    @property
    def is_all_unknown(self) -> bool:
        return self.cell == "?"

    def __str__(self) -> str:
        return self.cell


ALL_VERDICTS4 = tuple(
    Verdict4("0" * a + "?" * b + "1" * (4 - a - b))
    for a in range(5)
    for b in range(5 - a)
)


def xi(values: Iterable[TruthValue]) -> Verdict4:
    """Collapse a nonempty set of truth values to a verdict, bitwise.

    A cell is 0 (or 1) when every value agrees on that bit, ? otherwise.
    """
    values = set(values)
    if not values:
        raise ValueError("cannot collapse an empty set of truth values")
    cells = []
    for i in range(1, 5):
        bits = {v.bit(i) for v in values}
        cells.append("?" if len(bits) > 1 else str(bits.pop()))
    return Verdict4("".join(cells))


def specificity_leq(x, y) -> bool:
    """True iff y refines x: every definite cell of x is unchanged in y."""
    xs = x.cells if isinstance(x, Verdict4) else x.cell
    ys = y.cells if isinstance(y, Verdict4) else y.cell
    return all(a == "?" or a == b for a, b in zip(xs, ys))


# --------------------------------------------------------------------------
# Ultimately periodic words.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LassoWord:
    """An infinite word stem . loop^omega given by finite letter sequences."""

    stem: tuple
    loop: tuple

    def __post_init__(self):
        object.__setattr__(self, "stem", tuple(frozenset(a) for a in self.stem))
        object.__setattr__(self, "loop", tuple(frozenset(a) for a in self.loop))
        if not self.loop:
            raise ValueError("loop must be nonempty")

    @property
    def stem_len(self) -> int:
        return len(self.stem)

    @property
    def loop_len(self) -> int:
        return len(self.loop)

    @property
    def n_positions(self) -> int:
        return len(self.stem) + len(self.loop)

    def letter_at(self, k: int) -> Letter:
        if k < len(self.stem):
            return self.stem[k]
        return self.loop[(k - len(self.stem)) % len(self.loop)]

    def succ(self, k: int) -> int:
        """Successor inside the folded position space 0..n_positions-1."""
        return k + 1 if k + 1 < self.n_positions else self.stem_len

    def suffix(self, n: int) -> "LassoWord":
        if n <= len(self.stem):
            return LassoWord(self.stem[n:], self.loop)
        r = (n - len(self.stem)) % len(self.loop)
        return LassoWord((), self.loop[r:] + self.loop[:r])

    def prepend(self, letters: Iterable) -> "LassoWord":
        return LassoWord(tuple(frozenset(a) for a in letters) + self.stem, self.loop)

    def __str__(self) -> str:
        def fmt(letter):
            return "{" + ",".join(sorted(letter)) + "}"

        return "".join(fmt(a) for a in self.stem) + "(" + "".join(fmt(a) for a in self.loop) + ")^w"


# --------------------------------------------------------------------------
# The four-bit translation to classical LTL.
# --------------------------------------------------------------------------


def ltl_bit(i: int, formula: Formula) -> Formula:
    """The classical formula whose valuation is bit i of the robust one."""
    if not 1 <= i <= 4:
        raise ValueError(f"bit index must be 1..4, got {i}")
    if formula.flavor != ROBUST:
        raise FormulaError("bit translation applies to robust formulas")
    return Formula(_bit_node(i, formula.root), CLASSICAL)


def _bit_node(i: int, node: Node) -> Node:
    if isinstance(node, (Atom, TrueConst, FalseConst)):
        return node
    if isinstance(node, Not):
        # negation restarts at bit 1 regardless of i
        return Not(_bit_node(1, node.operand))
    if isinstance(node, And):
        return And(_bit_node(i, node.left), _bit_node(i, node.right))
    if isinstance(node, Or):
        return Or(_bit_node(i, node.left), _bit_node(i, node.right))
    if isinstance(node, Implies):
        head = Implies(_bit_node(i, node.left), _bit_node(i, node.right))
        if i == 4:
            return head
        return And(head, _bit_node(i + 1, node))
    if isinstance(node, Next):
        return Next(_bit_node(i, node.operand))
    if isinstance(node, Eventually):
        return Eventually(_bit_node(i, node.operand))
    if isinstance(node, Always):
        sub = _bit_node(i, node.operand)
        if i == 1:
            return Always(sub)
        if i == 2:
            return Eventually(Always(sub))
        if i == 3:
            return Always(Eventually(sub))
        return Eventually(sub)
    if isinstance(node, Until):
        return Until(_bit_node(i, node.left), _bit_node(i, node.right))
    if isinstance(node, Release):
        left = _bit_node(i, node.left)
        right = _bit_node(i, node.right)
        if i == 1:
            return Release(left, right)
        if i == 2:
            return Or(Eventually(Always(right)), Eventually(left))
        if i == 3:
            return Or(Always(Eventually(right)), Eventually(left))
        return Or(Eventually(right), Eventually(left))
    raise TypeError(f"unknown node type: {node!r}")  # pragma: no cover


# --------------------------------------------------------------------------
# Exact classical LTL evaluation on a lasso.
#
# Bottom-up over subformulas on the folded positions.  Until-like operators
# are least fixpoints: loop positions start at false and the one-step
# expansion is iterated to stability; release-like operators dually start
# at true.  Stem positions are then filled backward.
# --------------------------------------------------------------------------


def eval_ltl_lasso(word: LassoWord, formula: Formula) -> bool:
    if formula.flavor != CLASSICAL:
        raise FormulaError("classical evaluation applies to classical formulas")
    return _BoolEval(word).value(formula.root)[0]


class _BoolEval:
    def __init__(self, word: LassoWord):
        self.word = word
        self.n = word.n_positions
        self.memo: dict[Node, list[bool]] = {}

    def value(self, node: Node) -> list[bool]:
        if node in self.memo:
            return self.memo[node]
        word, n = self.word, self.n
        if isinstance(node, Atom):
            out = [node.name in word.letter_at(k) for k in range(n)]
        elif isinstance(node, TrueConst):
            out = [True] * n
        elif isinstance(node, FalseConst):
            out = [False] * n
        elif isinstance(node, Not):
            out = [not v for v in self.value(node.operand)]
        elif isinstance(node, And):
            lhs, rhs = self.value(node.left), self.value(node.right)
            out = [a and b for a, b in zip(lhs, rhs)]
        elif isinstance(node, Or):
            lhs, rhs = self.value(node.left), self.value(node.right)
            out = [a or b for a, b in zip(lhs, rhs)]
        elif isinstance(node, Implies):
            lhs, rhs = self.value(node.left), self.value(node.right)
            out = [(not a) or b for a, b in zip(lhs, rhs)]
        elif isinstance(node, Next):
            sub = self.value(node.operand)
            out = [sub[word.succ(k)] for k in range(n)]
        elif isinstance(node, Eventually):
            sub = self.value(node.operand)
            out = self._fixpoint(lambda k, nxt: sub[k] or nxt, init=False)
        elif isinstance(node, Always):
            sub = self.value(node.operand)
            out = self._fixpoint(lambda k, nxt: sub[k] and nxt, init=True)
        elif isinstance(node, Until):
            lhs, rhs = self.value(node.left), self.value(node.right)
            out = self._fixpoint(lambda k, nxt: rhs[k] or (lhs[k] and nxt), init=False)
        elif isinstance(node, Release):
            lhs, rhs = self.value(node.left), self.value(node.right)
            out = self._fixpoint(lambda k, nxt: rhs[k] and (lhs[k] or nxt), init=True)
        else:  # pragma: no cover
            raise TypeError(f"unknown node type: {node!r}")
        self.memo[node] = out
        return out

    def _fixpoint(self, step, init: bool) -> list[bool]:
        word = self.word
        vals = [init] * self.n
        changed = True
        while changed:
            changed = False
            for k in range(self.n - 1, word.stem_len - 1, -1):
                new = step(k, vals[word.succ(k)])
                if new != vals[k]:
                    vals[k] = new
                    changed = True
        for k in range(word.stem_len - 1, -1, -1):
            vals[k] = step(k, vals[k + 1])
        return vals


# --------------------------------------------------------------------------
# Direct robust evaluation on a lasso.
#
# The limit bits of the always/release rows resolve over the loop: loop
# suffixes recur cyclically, so an inner min/max over all late positions
# equals the min/max over one full loop cycle.  Each position's walk below
# ends with a stabilized cycle, whose entries decide the limit bits while
# the whole walk decides the bits quantified over every position.
# --------------------------------------------------------------------------


def eval_rltl_lasso(word: LassoWord, formula: Formula) -> TruthValue:
    if formula.flavor != ROBUST:
        raise FormulaError("robust evaluation applies to robust formulas")
    return _RobustEval(word).value(formula.root)[0]


class _RobustEval:
    def __init__(self, word: LassoWord):
        self.word = word
        self.n = word.n_positions
        self.memo: dict[Node, list[TruthValue]] = {}

    def value(self, node: Node) -> list[TruthValue]:
        if node in self.memo:
            return self.memo[node]
        word, n = self.word, self.n
        if isinstance(node, Atom):
            out = [
                TruthValue.T1111 if node.name in word.letter_at(k) else TruthValue.T0000
                for k in range(n)
            ]
        elif isinstance(node, TrueConst):
            out = [TruthValue.T1111] * n
        elif isinstance(node, FalseConst):
            out = [TruthValue.T0000] * n
        elif isinstance(node, Not):
            out = [
                TruthValue.T0000 if v == TruthValue.T1111 else TruthValue.T1111
                for v in self.value(node.operand)
            ]
        elif isinstance(node, And):
            lhs, rhs = self.value(node.left), self.value(node.right)
            out = [min(a, b) for a, b in zip(lhs, rhs)]
        elif isinstance(node, Or):
            lhs, rhs = self.value(node.left), self.value(node.right)
            out = [max(a, b) for a, b in zip(lhs, rhs)]
        elif isinstance(node, Implies):
            lhs, rhs = self.value(node.left), self.value(node.right)
            out = [TruthValue.T1111 if a <= b else b for a, b in zip(lhs, rhs)]
        elif isinstance(node, Next):
            sub = self.value(node.operand)
            out = [sub[word.succ(k)] for k in range(n)]
        elif isinstance(node, Eventually):
            # all four bits maximize over suffixes, so the rows collapse to
            # one max over the totally ordered values
            sub = self.value(node.operand)
            out = self._fixpoint(lambda k, nxt: max(sub[k], nxt))
        elif isinstance(node, Until):
            lhs, rhs = self.value(node.left), self.value(node.right)
            out = self._fixpoint(lambda k, nxt: max(rhs[k], min(lhs[k], nxt)))
        elif isinstance(node, Always):
            sub = self.value(node.operand)
            out = [self._always_at(k, sub) for k in range(n)]
        elif isinstance(node, Release):
            lhs, rhs = self.value(node.left), self.value(node.right)
            out = [self._release_at(k, lhs, rhs) for k in range(n)]
        else:  # pragma: no cover
            raise TypeError(f"unknown node type: {node!r}")
        self.memo[node] = out
        return out

    def _fixpoint(self, step) -> list[TruthValue]:
        word = self.word
        vals = [TruthValue.T0000] * self.n
        changed = True
        while changed:
            changed = False
            for k in range(self.n - 1, word.stem_len - 1, -1):
                new = step(k, vals[word.succ(k)])
                if new != vals[k]:
                    vals[k] = new
                    changed = True
        for k in range(word.stem_len - 1, -1, -1):
            vals[k] = step(k, vals[k + 1])
        return vals

    def _path(self, k: int) -> list[int]:
        """Positions visited from k, ending with one full stabilized cycle."""
        word = self.word
        path = []
        steps = (self.n - k) + 2 * word.loop_len
        pos = k
        for _ in range(steps):
            path.append(pos)
            pos = word.succ(pos)
        return path

    def _always_at(self, k: int, sub: list[TruthValue]) -> TruthValue:
        path = self._path(k)
        cycle = path[-self.word.loop_len:]
        b1 = min(sub[p].bit(1) for p in path)
        b2 = min(sub[p].bit(2) for p in cycle)
        b3 = max(sub[p].bit(3) for p in cycle)
        b4 = max(sub[p].bit(4) for p in path)
        return TruthValue.from_bits((b1, b2, b3, b4))

    def _release_at(self, k: int, lhs: list[TruthValue], rhs: list[TruthValue]) -> TruthValue:
        path = self._path(k)
        loop_len = self.word.loop_len
        bits = []
        for i in range(1, 5):
            # c_j: the right operand holds now, or the left held strictly earlier
            cs = []
            seen_left = 0
            for p in path:
                cs.append(max(rhs[p].bit(i), seen_left))
                seen_left = max(seen_left, lhs[p].bit(i))
            cycle = cs[-loop_len:]
            if i == 1:
                bits.append(min(cs))
            elif i == 2:
                bits.append(min(cycle))
            elif i == 3:
                bits.append(max(cycle))
            else:
                bits.append(max(cs))
        return TruthValue.from_bits(bits)
