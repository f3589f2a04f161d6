"""Automata along the compilation pipeline.

Classical LTL formulas compile to Büchi automata through an on-the-fly
tableau over formula expansions (generalized acceptance, then a counter
product).  Per-state emptiness turns a Büchi automaton into a prefix NFA,
and the subset construction plus partition refinement produce the minimal
DFAs the monitor product consumes.
"""

from __future__ import annotations

from collections import deque

from .semantics import Letter, TruthValue, ltl_bit
from .syntax import (
    CLASSICAL,
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

DEFAULT_STATE_BUDGET = 100_000
MAX_ALPHABET_PROPS = 16


class StateBudgetError(RuntimeError):
    """A construction stage exceeded the configured state budget."""

    def __init__(self, stage: str, budget: int):
        super().__init__(f"state budget of {budget} exceeded during {stage}")
        self.stage = stage
        self.budget = budget


class AlphabetError(ValueError):
    """The proposition set cannot be materialized as an explicit alphabet."""


def make_alphabet(props) -> tuple[Letter, ...]:
    """Materialize 2^P as a canonically ordered letter tuple."""
    names = sorted(set(props))
    if len(names) > MAX_ALPHABET_PROPS:
        raise AlphabetError(
            f"alphabet of {len(names)} propositions exceeds the cap of {MAX_ALPHABET_PROPS}"
        )
    letters = []
    for mask in range(1 << len(names)):
        letters.append(frozenset(names[j] for j in range(len(names)) if mask >> j & 1))
    return tuple(letters)


def letter_label(letter: Letter) -> str:
    return ",".join(sorted(letter)) if letter else "{}"


class Nfa:
    """Nondeterministic automaton over finite words.

    States are 0..n_states-1; transitions map (state, letter) to a frozen
    set of successors; a word is accepted when some run ends in an
    accepting state.
    """

    def __init__(self, alphabet, n_states, initial, transitions, accepting):
        self.alphabet = tuple(alphabet)
        self.n_states = n_states
        self.initial = initial
        self.transitions = dict(transitions)
        self.accepting = frozenset(accepting)

    def successors(self, state: int, letter: Letter) -> frozenset:
        return self.transitions.get((state, letter), frozenset())

    def accepts(self, word) -> bool:
        current = {self.initial}
        for letter in word:
            current = {q2 for q in current for q2 in self.successors(q, letter)}
        return any(q in self.accepting for q in current)


class BuchiAutomaton(Nfa):
    """Same shape as an NFA; accepts infinite words whose run visits
    accepting states infinitely often."""

    def accepts(self, word):
        raise TypeError("acceptance is over infinite words; use accepts_lasso")


class Dfa:
    """Complete deterministic automaton: one successor per state and letter."""

    def __init__(self, alphabet, n_states, initial, transition, accepting):
        self.alphabet = tuple(alphabet)
        self.n_states = n_states
        self.initial = initial
        self.transition = dict(transition)
        self.accepting = frozenset(accepting)

    def step(self, state: int, letter: Letter) -> int:
        return self.transition[(state, letter)]

    def accepts(self, word) -> bool:
        state = self.initial
        for letter in word:
            state = self.step(state, letter)
        return state in self.accepting


# --------------------------------------------------------------------------
# Negation normal form over {literals, and, or, next, until, release}.
# --------------------------------------------------------------------------


def _nnf(node: Node) -> Node:
    if isinstance(node, (Atom, TrueConst, FalseConst)):
        return node
    if isinstance(node, Not):
        return _nnf_neg(node.operand)
    if isinstance(node, And):
        return And(_nnf(node.left), _nnf(node.right))
    if isinstance(node, Or):
        return Or(_nnf(node.left), _nnf(node.right))
    if isinstance(node, Implies):
        return Or(_nnf_neg(node.left), _nnf(node.right))
    if isinstance(node, Next):
        return Next(_nnf(node.operand))
    if isinstance(node, Eventually):
        return Until(TrueConst(), _nnf(node.operand))
    if isinstance(node, Always):
        return Release(FalseConst(), _nnf(node.operand))
    if isinstance(node, Until):
        return Until(_nnf(node.left), _nnf(node.right))
    if isinstance(node, Release):
        return Release(_nnf(node.left), _nnf(node.right))
    raise TypeError(f"unknown node type: {node!r}")  # pragma: no cover


def _nnf_neg(node: Node) -> Node:
    if isinstance(node, Atom):
        return Not(node)
    if isinstance(node, TrueConst):
        return FalseConst()
    if isinstance(node, FalseConst):
        return TrueConst()
    if isinstance(node, Not):
        return _nnf(node.operand)
    if isinstance(node, And):
        return Or(_nnf_neg(node.left), _nnf_neg(node.right))
    if isinstance(node, Or):
        return And(_nnf_neg(node.left), _nnf_neg(node.right))
    if isinstance(node, Implies):
        return And(_nnf(node.left), _nnf_neg(node.right))
    if isinstance(node, Next):
        return Next(_nnf_neg(node.operand))
    if isinstance(node, Eventually):
        return Release(FalseConst(), _nnf_neg(node.operand))
    if isinstance(node, Always):
        return Until(TrueConst(), _nnf_neg(node.operand))
    if isinstance(node, Until):
        return Release(_nnf_neg(node.left), _nnf_neg(node.right))
    if isinstance(node, Release):
        return Until(_nnf_neg(node.left), _nnf_neg(node.right))
    raise TypeError(f"unknown node type: {node!r}")  # pragma: no cover


# --------------------------------------------------------------------------
# Simplification of NNF formulas.  Everything here preserves the language;
# the point is to shrink tableau inputs, which the bit translation otherwise
# fills with redundant limit-operator chains.
# --------------------------------------------------------------------------

_TRUE = TrueConst()
_FALSE = FalseConst()


def _is_ev(node: Node) -> bool:
    return isinstance(node, Until) and node.left == _TRUE


def _is_alw(node: Node) -> bool:
    return isinstance(node, Release) and node.left == _FALSE


def _is_limit(node: Node) -> bool:
    # eventually-always or always-eventually: invariant under suffix shifts
    return (_is_ev(node) and _is_alw(node.right)) or (_is_alw(node) and _is_ev(node.right))


def _or_leaves(node: Node, out: list) -> None:
    if isinstance(node, Or):
        _or_leaves(node.left, out)
        _or_leaves(node.right, out)
    else:
        out.append(node)


def _and_leaves(node: Node, out: list) -> None:
    if isinstance(node, And):
        _and_leaves(node.left, out)
        _and_leaves(node.right, out)
    else:
        out.append(node)


def _rebuild_chain(leaves: list[Node], cls) -> Node:
    leaves = sorted(set(leaves), key=repr)
    node = leaves[0]
    for leaf in leaves[1:]:
        node = cls(node, leaf)
    return node


def _simplify(node: Node) -> Node:
    if isinstance(node, (Atom, Not, TrueConst, FalseConst)):
        return node
    if isinstance(node, Next):
        sub = _simplify(node.operand)
        if isinstance(sub, (TrueConst, FalseConst)) or _is_limit(sub):
            return sub
        return Next(sub)
    if isinstance(node, Or):
        leaves: list[Node] = []
        _or_leaves(node, leaves)
        leaves = [_simplify(leaf) for leaf in leaves]
        flat: list[Node] = []
        for leaf in leaves:
            _or_leaves(leaf, flat)
        if any(isinstance(leaf, TrueConst) for leaf in flat):
            return _TRUE
        flat = [leaf for leaf in flat if not isinstance(leaf, FalseConst)]
        if not flat:
            return _FALSE
        atoms_present = {leaf for leaf in flat if isinstance(leaf, Atom)}
        if any(isinstance(leaf, Not) and leaf.operand in atoms_present for leaf in flat):
            return _TRUE
        # F x | F y = F (x | y); G F x | G F y = G F (x | y)
        flat = _merge_shapes(
            flat, _is_ev, lambda n: n.right,
            lambda xs: Until(_TRUE, _simplify(_rebuild_chain(xs, Or))),
        )
        flat = _merge_shapes(
            flat, lambda n: _is_alw(n) and _is_ev(n.right), lambda n: n.right.right,
            lambda xs: Release(_FALSE, Until(_TRUE, _simplify(_rebuild_chain(xs, Or)))),
        )
        return _rebuild_chain(flat, Or)
    if isinstance(node, And):
        leaves = []
        _and_leaves(node, leaves)
        leaves = [_simplify(leaf) for leaf in leaves]
        flat = []
        for leaf in leaves:
            _and_leaves(leaf, flat)
        if any(isinstance(leaf, FalseConst) for leaf in flat):
            return _FALSE
        flat = [leaf for leaf in flat if not isinstance(leaf, TrueConst)]
        if not flat:
            return _TRUE
        atoms_present = {leaf for leaf in flat if isinstance(leaf, Atom)}
        if any(isinstance(leaf, Not) and leaf.operand in atoms_present for leaf in flat):
            return _FALSE
        # G x & G y = G (x & y); F G x & F G y = F G (x & y)
        flat = _merge_shapes(
            flat, _is_alw, lambda n: n.right,
            lambda xs: Release(_FALSE, _simplify(_rebuild_chain(xs, And))),
        )
        flat = _merge_shapes(
            flat, lambda n: _is_ev(n) and _is_alw(n.right), lambda n: n.right.right,
            lambda xs: Until(_TRUE, Release(_FALSE, _simplify(_rebuild_chain(xs, And)))),
        )
        return _rebuild_chain(flat, And)
    if isinstance(node, Until):
        left = _simplify(node.left)
        right = _simplify(node.right)
        if isinstance(right, (TrueConst, FalseConst)):
            return right
        if isinstance(left, FalseConst) or left == right:
            return right
        if isinstance(right, Until) and right.left == left:
            return right
        if isinstance(left, TrueConst) and _is_alw(right) and _is_ev(right.right):
            return right  # F G F x = G F x
        return Until(left, right)
    if isinstance(node, Release):
        left = _simplify(node.left)
        right = _simplify(node.right)
        if isinstance(right, (TrueConst, FalseConst)):
            return right
        if isinstance(left, TrueConst) or left == right:
            return right
        if isinstance(right, Release) and right.left == left:
            return right
        if isinstance(left, FalseConst) and _is_ev(right) and _is_alw(right.right):
            return right  # G F G x = F G x
        return Release(left, right)
    raise TypeError(f"unknown node in simplifier: {node!r}")  # pragma: no cover


def _merge_shapes(leaves: list[Node], match, extract, build) -> list[Node]:
    hits = [leaf for leaf in leaves if match(leaf)]
    if len(hits) < 2:
        return leaves
    rest = [leaf for leaf in leaves if not match(leaf)]
    return rest + [build([extract(hit) for hit in hits])]


def _until_subformulas(node: Node) -> list[Node]:
    seen: set[Node] = set()
    out = []

    def walk(n: Node) -> None:
        if n in seen:
            return
        seen.add(n)
        if isinstance(n, Until):
            out.append(n)
        if isinstance(n, (Next,)):
            walk(n.operand)
        elif isinstance(n, (And, Or, Until, Release)):
            walk(n.left)
            walk(n.right)

    walk(node)
    return sorted(out, key=repr)


# --------------------------------------------------------------------------
# Tableau construction of a generalized Büchi automaton, then a counter
# product to plain Büchi acceptance.
# --------------------------------------------------------------------------


def ltl_to_buchi(formula: Formula, props, budget: int = DEFAULT_STATE_BUDGET) -> BuchiAutomaton:
    """Compile a classical formula to a Büchi automaton over 2^props."""
    if formula.flavor != CLASSICAL:
        raise FormulaError("automaton compilation applies to classical formulas")
    props = sorted(set(props))
    missing = formula.atoms - set(props)
    if missing:
        raise FormulaError(f"formula uses propositions outside the alphabet: {sorted(missing)}")
    alphabet = make_alphabet(props)
    root = _simplify(_nnf(formula.root))
    closure_index: dict[Node, int] = {}

    def index_closure(node: Node) -> None:
        if node in closure_index:
            return
        closure_index[node] = len(closure_index)
        for child in _nnf_children(node):
            index_closure(child)

    index_closure(root)

    # Tableau expansion.  An expansion state keeps only what downstream
    # behavior can observe: unprocessed formulas, processed literals (edge
    # labels and contradiction checks), processed untils and processed
    # until-right-sides (acceptance), and next obligations (successors).
    # Memoizing whole states turns the naive exponential branching tree
    # into a DAG traversal, and completed nodes carrying equal observables
    # merge.  Id 0 marks the fresh initial state; node i sits at state
    # i + 1.
    until_rights = frozenset(eta.right for eta in _until_subformulas(root))
    registered: dict[tuple[frozenset, frozenset, frozenset], int] = {}
    node_lits: list[frozenset] = []
    node_pending: list[frozenset] = []
    nexts: list[frozenset] = []
    expand_memo: dict[tuple, frozenset] = {}

    def register(lits: frozenset, pending: frozenset, next_fs: frozenset) -> int:
        key = (lits, pending, next_fs)
        nid = registered.get(key)
        if nid is None:
            if len(nexts) + 1 >= budget:
                raise StateBudgetError("tableau expansion", budget)
            nid = len(nexts)
            registered[key] = nid
            node_lits.append(lits)
            node_pending.append(pending)
            nexts.append(next_fs)
        return nid

    def prune(result: frozenset) -> frozenset:
        """Drop alternatives another alternative directly simulates.

        A node with fewer literal constraints, fewer next obligations, and
        fewer unfulfilled untils admits every continuation of the stronger
        one with at least the same acceptance marks.
        """
        if len(result) < 2:
            return result
        kept = []
        for b in sorted(result):
            subsumed = any(
                a != b
                and node_lits[a] <= node_lits[b]
                and nexts[a] <= nexts[b]
                and node_pending[a] <= node_pending[b]
                for a in result
            )
            if not subsumed:
                kept.append(b)
        return frozenset(kept)

    def expand(new_fs: frozenset, lits: frozenset, until_proc: frozenset,
               right_proc: frozenset, next_fs: frozenset) -> frozenset:
        """Completed tableau nodes reachable from this expansion state."""
        key = (new_fs, lits, until_proc, right_proc, next_fs)
        cached = expand_memo.get(key)
        if cached is not None:
            return cached
        if len(expand_memo) >= 64 * budget:
            raise StateBudgetError("tableau expansion", budget)
        if not new_fs:
            pending = frozenset(
                eta for eta in until_proc if eta.right not in right_proc
            )
            result = frozenset({register(lits, pending, next_fs)})
        else:
            eta = min(new_fs, key=closure_index.__getitem__)
            rest = new_fs - {eta}
            rights = right_proc | ({eta} & until_rights)
            done = lits | until_proc | rights
            if isinstance(eta, (Atom, TrueConst, FalseConst)) or (
                isinstance(eta, Not) and isinstance(eta.operand, Atom)
            ):
                if isinstance(eta, FalseConst) or _literal_negation(eta) in lits:
                    result = frozenset()  # contradictory node dies
                else:
                    result = expand(rest, lits | {eta}, until_proc, rights, next_fs)
            elif isinstance(eta, And):
                result = expand(
                    rest | ({eta.left, eta.right} - done), lits, until_proc, rights, next_fs
                )
            elif isinstance(eta, Next):
                result = expand(rest, lits, until_proc, rights, next_fs | {eta.operand})
            elif isinstance(eta, Or):
                result = expand(
                    rest | ({eta.left} - done), lits, until_proc, rights, next_fs
                ) | expand(
                    rest | ({eta.right} - done), lits, until_proc, rights, next_fs
                )
            elif isinstance(eta, Until):
                untils2 = until_proc | {eta}
                result = expand(
                    rest | ({eta.left} - done), lits, untils2, rights, next_fs | {eta}
                ) | expand(rest | ({eta.right} - done), lits, untils2, rights, next_fs)
            elif isinstance(eta, Release):
                result = expand(
                    rest | ({eta.right} - done), lits, until_proc, rights, next_fs | {eta}
                ) | expand(
                    rest | ({eta.left, eta.right} - done), lits, until_proc, rights, next_fs
                )
            else:  # pragma: no cover
                raise TypeError(f"unexpected formula in tableau: {eta!r}")
            result = prune(result)
        expand_memo[key] = result
        return result

    empty = frozenset()
    incoming_edges: list[tuple[int, int]] = []
    roots = sorted(expand(frozenset({root}), empty, empty, empty, empty))
    for target in roots:
        incoming_edges.append((0, target))
    wire_queue = deque(roots)
    wired = set(roots)
    while wire_queue:
        nid = wire_queue.popleft()
        for target in sorted(expand(nexts[nid], empty, empty, empty, empty)):
            incoming_edges.append((nid + 1, target))
            if target not in wired:
                wired.add(target)
                wire_queue.append(target)

    n_nodes = len(nexts)
    incoming: list[set[int]] = [set() for _ in range(n_nodes)]
    for pred, target in incoming_edges:
        incoming[target].add(pred)
    node_letters = []
    for lits in node_lits:
        pos = {f.name for f in lits if isinstance(f, Atom)}
        neg = {f.operand.name for f in lits if isinstance(f, Not)}
        node_letters.append(
            tuple(a for a in alphabet if pos <= a and not (neg & a))
        )

    # generalized acceptance: one set per until subformula
    untils = _until_subformulas(root)
    acc_sets = [
        frozenset(nid for nid in range(n_nodes) if eta not in node_pending[nid])
        for eta in untils
    ]

    # edges in tableau numbering (init marker 0, node i at i + 1)
    edges: dict[tuple[int, Letter], set[int]] = {}
    for nid in range(n_nodes):
        for pred in incoming[nid]:
            for letter in node_letters[nid]:
                edges.setdefault((pred, letter), set()).add(nid + 1)

    k = len(acc_sets)

    def in_set(state: int, j: int) -> bool:
        return state >= 1 and (state - 1) in acc_sets[j]

    # counter product; (state, counter), counter k is the accepting flush
    start = (0, 0)
    numbering = {start: 0}
    order = [start]
    transitions: dict[tuple[int, Letter], frozenset] = {}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        cid = numbering[current]
        state, counter = current
        base = 0 if counter == k else counter
        for letter in alphabet:
            targets = []
            for succ in sorted(edges.get((state, letter), ())):
                j = base
                while j < k and in_set(succ, j):
                    j += 1
                target = (succ, j)
                if target not in numbering:
                    if len(numbering) >= budget:
                        raise StateBudgetError("degeneralization", budget)
                    numbering[target] = len(numbering)
                    order.append(target)
                    queue.append(target)
                targets.append(numbering[target])
            if targets:
                transitions[(cid, letter)] = frozenset(targets)
    if k == 0:
        accepting = frozenset(range(len(numbering)))
    else:
        accepting = frozenset(numbering[s] for s in order if s[1] == k)
    result = BuchiAutomaton(alphabet, len(numbering), 0, transitions, accepting)
    return _bisim_quotient(result)


def _bisim_quotient(a: BuchiAutomaton) -> BuchiAutomaton:
    """Quotient by strong bisimulation with acceptance labels; preserves the
    language and typically shrinks tableau output substantially."""
    block = [1 if q in a.accepting else 0 for q in range(a.n_states)]
    n_blocks = len(set(block))
    succ = [
        [frozenset(a.successors(q, letter)) for letter in a.alphabet]
        for q in range(a.n_states)
    ]
    while True:
        ids: dict = {}
        new_block = [0] * a.n_states
        for q in range(a.n_states):
            sig = (
                block[q],
                tuple(frozenset(block[t] for t in targets) for targets in succ[q]),
            )
            if sig not in ids:
                ids[sig] = len(ids)
            new_block[q] = ids[sig]
        block = new_block
        if len(ids) == n_blocks:
            break
        n_blocks = len(ids)
    if n_blocks == a.n_states:
        return a
    # canonical renumbering by breadth-first discovery over quotient blocks
    rep = {}
    for q in range(a.n_states):
        rep.setdefault(block[q], q)
    numbering = {block[a.initial]: 0}
    queue = deque([block[a.initial]])
    transitions: dict[tuple[int, Letter], frozenset] = {}
    accepting = set()
    while queue:
        b = queue.popleft()
        bid = numbering[b]
        q = rep[b]
        if q in a.accepting:
            accepting.add(bid)
        for j, letter in enumerate(a.alphabet):
            target_blocks = sorted({block[t] for t in succ[q][j]})
            ids_here = []
            for tb in target_blocks:
                if tb not in numbering:
                    numbering[tb] = len(numbering)
                    queue.append(tb)
                ids_here.append(numbering[tb])
            if ids_here:
                transitions[(bid, letter)] = frozenset(ids_here)
    return BuchiAutomaton(a.alphabet, len(numbering), 0, transitions, frozenset(accepting))


def _nnf_children(node: Node) -> tuple[Node, ...]:
    if isinstance(node, (And, Or, Until, Release)):
        return (node.left, node.right)
    if isinstance(node, Next):
        return (node.operand,)
    return ()


def _literal_negation(eta: Node) -> Node:
    if isinstance(eta, Not):
        return eta.operand
    if isinstance(eta, Atom):
        return Not(eta)
    return FalseConst() if isinstance(eta, TrueConst) else TrueConst()


# --------------------------------------------------------------------------
# Büchi intersection (two-copy product) and per-value languages.
# --------------------------------------------------------------------------


def buchi_intersection(a: BuchiAutomaton, b: BuchiAutomaton,
                       budget: int = DEFAULT_STATE_BUDGET) -> BuchiAutomaton:
    if a.alphabet != b.alphabet:
        raise ValueError("intersection requires a common alphabet")
    start = (a.initial, b.initial, 1)
    numbering = {start: 0}
    queue = deque([start])
    transitions: dict[tuple[int, Letter], frozenset] = {}
    accepting = set()
    while queue:
        current = queue.popleft()
        cid = numbering[current]
        qa, qb, copy = current
        if copy == 1 and qa in a.accepting:
            accepting.add(cid)
        for letter in a.alphabet:
            targets = []
            for na in sorted(a.successors(qa, letter)):
                for nb in sorted(b.successors(qb, letter)):
                    if copy == 1:
                        ncopy = 2 if qa in a.accepting else 1
                    else:
                        ncopy = 1 if qb in b.accepting else 2
                    target = (na, nb, ncopy)
                    if target not in numbering:
                        if len(numbering) >= budget:
                            raise StateBudgetError("intersection product", budget)
                        numbering[target] = len(numbering)
                        queue.append(target)
                    targets.append(numbering[target])
            if targets:
                transitions[(cid, letter)] = frozenset(targets)
    return BuchiAutomaton(a.alphabet, len(numbering), 0, transitions, frozenset(accepting))


def product_language_of_truth_value(formula: Formula, value: TruthValue, props,
                                    budget: int = DEFAULT_STATE_BUDGET) -> BuchiAutomaton:
    """Büchi automaton for the words whose robust valuation equals `value`.

    Monotonicity of the bits means only the boundary bits constrain the
    language: the highest zero bit must fail and the bit after it must
    hold.  Negated bits compile from the negated formula; the two boundary
    automata are trimmed to their live parts before the product.
    """
    level = int(value)
    if level == 4:
        return ltl_to_buchi(ltl_bit(1, formula), props, budget)
    if level == 0:
        low = ltl_bit(4, formula)
        return ltl_to_buchi(Formula(Not(low.root), CLASSICAL), props, budget)
    zero_bit = 4 - level
    low = ltl_bit(zero_bit, formula)
    high = ltl_bit(zero_bit + 1, formula)
    return buchi_intersection(
        trim_buchi(ltl_to_buchi(Formula(Not(low.root), CLASSICAL), props, budget)),
        trim_buchi(ltl_to_buchi(high, props, budget)),
        budget,
    )


# --------------------------------------------------------------------------
# Per-state emptiness and the prefix NFA.
# --------------------------------------------------------------------------


def _tarjan_sccs(n: int, succ: list[list[int]]) -> list[list[int]]:
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, child_i = work[-1]
            if child_i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            if child_i < len(succ[v]):
                work[-1] = (v, child_i + 1)
                w = succ[v][child_i]
                if index[w] == -1:
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    low[u] = min(low[u], low[v])
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        comp.append(w)
                        if w == v:
                            break
                    comps.append(comp)
    return comps


def live_states(a: BuchiAutomaton) -> frozenset:
    """States from which some accepting run exists.

    A state is live iff it reaches a nontrivial strongly connected
    component containing an accepting state.
    """
    succ: list[set[int]] = [set() for _ in range(a.n_states)]
    for (q, _letter), targets in a.transitions.items():
        succ[q] |= targets
    succ_lists = [sorted(s) for s in succ]
    seeds: set[int] = set()
    for comp in _tarjan_sccs(a.n_states, succ_lists):
        nontrivial = len(comp) > 1 or comp[0] in succ[comp[0]]
        if nontrivial and any(q in a.accepting for q in comp):
            seeds |= set(comp)
    pred: list[set[int]] = [set() for _ in range(a.n_states)]
    for q, targets in enumerate(succ):
        for q2 in targets:
            pred[q2].add(q)
    live = set(seeds)
    queue = sorted(seeds)
    while queue:
        q = queue.pop()
        for p in pred[q]:
            if p not in live:
                live.add(p)
                queue.append(p)
    return frozenset(live)


def prefix_nfa(a: BuchiAutomaton) -> Nfa:
    """NFA accepting exactly the finite words extensible into the language."""
    return Nfa(a.alphabet, a.n_states, a.initial, a.transitions, live_states(a))


def trim_buchi(a: BuchiAutomaton) -> BuchiAutomaton:
    """Restrict to states both reachable and live.

    Accepting runs only ever visit such states, so the language is
    preserved; so is the set of finite words extensible into it, because
    every finite run ending in a live state stays within live states.
    """
    live = live_states(a)
    keep_mask = set()
    if a.initial in live:
        queue = deque([a.initial])
        keep_mask.add(a.initial)
        while queue:
            q = queue.popleft()
            for letter in a.alphabet:
                for q2 in a.successors(q, letter):
                    if q2 in live and q2 not in keep_mask:
                        keep_mask.add(q2)
                        queue.append(q2)
    if not keep_mask:
        return BuchiAutomaton(a.alphabet, 1, 0, {}, frozenset())
    renumber = {q: i for i, q in enumerate(sorted(keep_mask))}
    transitions = {}
    for (q, letter), targets in a.transitions.items():
        if q in renumber:
            kept = frozenset(renumber[t] for t in targets if t in renumber)
            if kept:
                transitions[(renumber[q], letter)] = kept
    accepting = frozenset(renumber[q] for q in a.accepting if q in renumber)
    return BuchiAutomaton(a.alphabet, len(renumber), renumber[a.initial], transitions, accepting)


def accepts_lasso(a: BuchiAutomaton, word) -> bool:
    """Membership of an ultimately periodic word, by searching the product
    of the automaton with the word's folded positions for an accepting
    cycle."""
    start = (a.initial, 0)
    numbering = {start: 0}
    order = [start]
    queue = deque([start])
    succ: list[list[int]] = []
    while queue:
        current = queue.popleft()
        q, k = current
        targets = []
        for q2 in sorted(a.successors(q, word.letter_at(k))):
            target = (q2, word.succ(k))
            if target not in numbering:
                numbering[target] = len(numbering)
                order.append(target)
                queue.append(target)
            targets.append(numbering[target])
        succ.append(targets)
    succ_sets = [set(t) for t in succ]
    for comp in _tarjan_sccs(len(order), succ):
        nontrivial = len(comp) > 1 or comp[0] in succ_sets[comp[0]]
        if nontrivial and any(order[i][0] in a.accepting for i in comp):
            return True
    return False


# --------------------------------------------------------------------------
# Determinization and DFA minimization.
# --------------------------------------------------------------------------


def determinize(nfa: Nfa, budget: int = DEFAULT_STATE_BUDGET) -> Dfa:
    """Subset construction; the empty subset acts as the rejecting sink.

    Subsets are bitmasks so successor sets combine with bitwise or.
    """
    letter_index = {letter: j for j, letter in enumerate(nfa.alphabet)}
    succ_mask = [[0] * len(nfa.alphabet) for _ in range(nfa.n_states)]
    for (q, letter), targets in nfa.transitions.items():
        mask = 0
        for t in targets:
            mask |= 1 << t
        succ_mask[q][letter_index[letter]] |= mask
    accept_mask = 0
    for q in nfa.accepting:
        accept_mask |= 1 << q

    start = 1 << nfa.initial
    numbering = {start: 0}
    order = [start]
    queue = deque([start])
    transition: dict[tuple[int, Letter], int] = {}
    while queue:
        subset = queue.popleft()
        sid = numbering[subset]
        for j, letter in enumerate(nfa.alphabet):
            target = 0
            rest = subset
            while rest:
                low = rest & -rest
                target |= succ_mask[low.bit_length() - 1][j]
                rest ^= low
            if target not in numbering:
                if len(numbering) >= budget:
                    raise StateBudgetError("determinization", budget)
                numbering[target] = len(numbering)
                order.append(target)
                queue.append(target)
            transition[(sid, letter)] = numbering[target]
    accepting = frozenset(numbering[s] for s in order if s & accept_mask)
    return Dfa(nfa.alphabet, len(numbering), 0, transition, accepting)


def dfa_minimize(d: Dfa) -> Dfa:
    """Unique minimal language-equivalent DFA via partition refinement."""
    reachable = _dfa_reachable(d)
    block = {q: (q in d.accepting) for q in reachable}
    while True:
        signatures = {
            q: (block[q], tuple(block[d.step(q, a)] for a in d.alphabet))
            for q in reachable
        }
        new_ids: dict = {}
        new_block = {}
        for q in reachable:
            sig = signatures[q]
            if sig not in new_ids:
                new_ids[sig] = len(new_ids)
            new_block[q] = new_ids[sig]
        if len(set(new_block.values())) == len(set(block.values())):
            block = new_block
            break
        block = new_block
    # canonical renumbering by breadth-first discovery from the initial block
    numbering = {block[d.initial]: 0}
    queue = deque([d.initial])
    rep = {block[d.initial]: d.initial}
    transition: dict[tuple[int, Letter], int] = {}
    accepting = set()
    while queue:
        q = queue.popleft()
        bid = numbering[block[q]]
        if q in d.accepting:
            accepting.add(bid)
        for letter in d.alphabet:
            q2 = d.step(q, letter)
            b2 = block[q2]
            if b2 not in numbering:
                numbering[b2] = len(numbering)
                rep[b2] = q2
                queue.append(q2)
            transition[(bid, letter)] = numbering[b2]
    return Dfa(d.alphabet, len(numbering), 0, transition, frozenset(accepting))


def _dfa_reachable(d: Dfa) -> list[int]:
    seen = {d.initial}
    queue = deque([d.initial])
    order = [d.initial]
    while queue:
        q = queue.popleft()
        for letter in d.alphabet:
            q2 = d.step(q, letter)
            if q2 not in seen:
                seen.add(q2)
                order.append(q2)
                queue.append(q2)
    return order


# --------------------------------------------------------------------------
# DOT export.
# --------------------------------------------------------------------------


def to_dot(automaton, name: str = "automaton") -> str:
    """Render any automaton in this module as a graphviz digraph."""
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  __init [shape=point, label=""];']
    for q in range(automaton.n_states):
        shape = "doublecircle" if q in automaton.accepting else "circle"
        lines.append(f'  q{q} [shape={shape}, label="{q}"];')
    lines.append(f"  __init -> q{automaton.initial};")
    grouped: dict[tuple[int, int], list[str]] = {}
    if isinstance(automaton, Dfa):
        items = ((q, letter, target) for (q, letter), target in automaton.transition.items())
        pairs = sorted((q, sorted(letter), target) for q, letter, target in items)
        for q, letter_names, target in pairs:
            grouped.setdefault((q, target), []).append(
                letter_label(frozenset(letter_names))
            )
    else:
        for (q, letter), targets in sorted(
            automaton.transitions.items(), key=lambda item: (item[0][0], sorted(item[0][1]))
        ):
            for target in sorted(targets):
                grouped.setdefault((q, target), []).append(letter_label(letter))
    for (q, target), labels in sorted(grouped.items()):
        label = " | ".join(labels)
        lines.append(f'  q{q} -> q{target} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
