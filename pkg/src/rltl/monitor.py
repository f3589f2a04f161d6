"""Moore-machine monitors: construction, minimization, execution, analysis.

A monitor is a complete deterministic transition structure whose per-state
output is the verdict for every input word reaching that state.  Robust
monitors are built as the product of five prefix DFAs, one per truth value,
with outputs collapsed bitwise; an independent per-bit construction and a
classical three-valued mode share the machinery.
"""

from __future__ import annotations

import json
import time
from collections import deque
from dataclasses import dataclass, field

from .automata import (
    DEFAULT_STATE_BUDGET,
    Dfa,
    StateBudgetError,
    determinize,
    dfa_minimize,
    letter_label,
    ltl_to_buchi,
    make_alphabet,
    prefix_nfa,
    product_language_of_truth_value,
    trim_buchi,
)
from .semantics import Letter, TruthValue, Verdict3, Verdict4, ltl_bit, specificity_leq, xi
from .syntax import CLASSICAL, ROBUST, Formula, FormulaError, Not

RLTL_MODE = "rltl"
LTL3_MODE = "ltl3"

FORMAT_NAME = "rltl-monitor"
FORMAT_VERSION = 1


class TraceError(ValueError):
    """A trace event uses propositions outside the monitor's alphabet."""


class MooreMonitor:
    """Deterministic complete transition structure with per-state verdicts.

    Compiled monitors are immutable; share them freely across readers and
    attach a MonitorRun per concurrent trace.
    """

    def __init__(self, mode, props, n_states, initial, transition, outputs):
        self.mode = mode
        self.props = tuple(sorted(props))
        self.alphabet = make_alphabet(self.props)
        self.n_states = n_states
        self.initial = initial
        self.transition = dict(transition)
        self.outputs = tuple(outputs)

    def output_of(self, state: int):
        return self.outputs[state]

    def step_state(self, state: int, letter: Letter) -> int:
        letter = self.check_letter(letter)
        return self.transition[(state, letter)]

    def check_letter(self, letter) -> Letter:
        letter = frozenset(letter)
        unknown = letter - set(self.props)
        if unknown:
            raise TraceError(f"unknown propositions in event: {sorted(unknown)}")
        return letter

    def verdict_for(self, word):
        """The verdict after reading a finite word (the empty word included)."""
        state = self.initial
        for letter in word:
            state = self.step_state(state, letter)
        return self.outputs[state]

    def verdicts_on_prefixes(self, word) -> list:
        """Verdicts for every prefix of the word, starting with the empty one."""
        state = self.initial
        out = [self.outputs[state]]
        for letter in word:
            state = self.step_state(state, letter)
            out.append(self.outputs[state])
        return out


class MonitorRun:
    """Single-owner cursor over a monitor; one run per concurrent trace."""

    def __init__(self, monitor: MooreMonitor):
        self.monitor = monitor
        self.cursor = monitor.initial
        self.steps = 0

    @property
    def current_output(self):
        return self.monitor.outputs[self.cursor]

    def step(self, letter):
        """Consume one event and return the new verdict."""
        self.cursor = self.monitor.step_state(self.cursor, letter)
        self.steps += 1
        return self.monitor.outputs[self.cursor]


@dataclass
class MonitorReport:
    """Build metrics for one compiled monitor."""

    state_count: int
    distinct_outputs: int
    monitorable: bool
    ugly_state_count: int
    build_ms: float
    stage_sizes: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "states": self.state_count,
            "outputs": self.distinct_outputs,
            "monitorable": self.monitorable,
            "ugly_states": self.ugly_state_count,
            "build_ms": round(self.build_ms, 3),
            "stage_sizes": dict(sorted(self.stage_sizes.items())),
        }


# --------------------------------------------------------------------------
# Construction.
# --------------------------------------------------------------------------


def _prefix_dfa(formula: Formula, props, budget: int) -> Dfa:
    """Minimal DFA accepting the finite words extensible into the formula's
    language."""
    buchi = trim_buchi(ltl_to_buchi(formula, props, budget))
    return dfa_minimize(determinize(prefix_nfa(buchi), budget))


def _resolve_props(formula: Formula, props):
    if props is None:
        return tuple(sorted(formula.atoms))
    props = tuple(sorted(set(props)))
    missing = formula.atoms - set(props)
    if missing:
        raise FormulaError(f"formula uses propositions outside the alphabet: {sorted(missing)}")
    return props


def build_rltl_monitor(formula: Formula, props=None,
                       budget: int = DEFAULT_STATE_BUDGET,
                       stage_sizes: dict | None = None) -> MooreMonitor:
    """Compile a robust formula to its unique minimal monitor."""
    if formula.flavor != ROBUST:
        raise FormulaError("robust monitor construction applies to robust formulas")
    props = _resolve_props(formula, props)
    dfas = []
    for value in TruthValue:
        try:
            buchi = trim_buchi(product_language_of_truth_value(formula, value, props, budget))
            dfa = dfa_minimize(determinize(prefix_nfa(buchi), budget))
        except StateBudgetError as e:
            raise StateBudgetError(f"{e.stage} (truth value {value})", e.budget) from None
        dfas.append((value, dfa))
        if stage_sizes is not None:
            stage_sizes[f"buchi:{value}"] = buchi.n_states
            stage_sizes[f"dfa:{value}"] = dfa.n_states

    def output(state_tuple) -> Verdict4:
        hit = {value for (value, dfa), q in zip(dfas, state_tuple) if q in dfa.accepting}
        return xi(hit)

    product = _moore_product(
        RLTL_MODE, props, [dfa for _, dfa in dfas], output, budget
    )
    if stage_sizes is not None:
        stage_sizes["product"] = product.n_states
    minimized = minimize_moore(product)
    if stage_sizes is not None:
        stage_sizes["minimized"] = minimized.n_states
    return minimized


def build_rltl_monitor_per_bit(formula: Formula, props=None,
                               budget: int = DEFAULT_STATE_BUDGET) -> MooreMonitor:
    """Independent robust monitor assembly, one three-valued cell per bit.

    Bit i is 0 when the prefix is not extensible into the bit-i language,
    1 when not extensible into its complement, ? otherwise.
    """
    if formula.flavor != ROBUST:
        raise FormulaError("robust monitor construction applies to robust formulas")
    props = _resolve_props(formula, props)
    dfas = []
    for i in range(1, 5):
        positive = ltl_bit(i, formula)
        negative = Formula(Not(positive.root), CLASSICAL)
        try:
            dfas.append(_prefix_dfa(positive, props, budget))
            dfas.append(_prefix_dfa(negative, props, budget))
        except StateBudgetError as e:
            raise StateBudgetError(f"{e.stage} (bit {i})", e.budget) from None

    def output(state_tuple) -> Verdict4:
        cells = []
        for i in range(4):
            pos_ok = state_tuple[2 * i] in dfas[2 * i].accepting
            neg_ok = state_tuple[2 * i + 1] in dfas[2 * i + 1].accepting
            if not pos_ok:
                cells.append("0")
            elif not neg_ok:
                cells.append("1")
            else:
                cells.append("?")
        return Verdict4("".join(cells))

    product = _moore_product(RLTL_MODE, props, dfas, output, budget)
    return minimize_moore(product)


def build_ltl3_monitor(formula: Formula, props=None,
                       budget: int = DEFAULT_STATE_BUDGET,
                       stage_sizes: dict | None = None) -> MooreMonitor:
    """Three-valued monitor for a classical formula from the two prefix DFAs
    of the formula and its negation."""
    if formula.flavor != CLASSICAL:
        raise FormulaError("three-valued monitor construction applies to classical formulas")
    props = _resolve_props(formula, props)
    positive = _prefix_dfa(formula, props, budget)
    negative = _prefix_dfa(Formula(Not(formula.root), CLASSICAL), props, budget)
    if stage_sizes is not None:
        stage_sizes["dfa:positive"] = positive.n_states
        stage_sizes["dfa:negative"] = negative.n_states

    def output(state_tuple) -> Verdict3:
        pos_ok = state_tuple[0] in positive.accepting
        neg_ok = state_tuple[1] in negative.accepting
        if not pos_ok:
            return Verdict3("0")
        if not neg_ok:
            return Verdict3("1")
        return Verdict3("?")

    product = _moore_product(LTL3_MODE, props, [positive, negative], output, budget)
    if stage_sizes is not None:
        stage_sizes["product"] = product.n_states
    minimized = minimize_moore(product)
    if stage_sizes is not None:
        stage_sizes["minimized"] = minimized.n_states
    return minimized


def _moore_product(mode, props, dfas, output_fn, budget: int) -> MooreMonitor:
    alphabet = make_alphabet(props)
    start = tuple(d.initial for d in dfas)
    numbering = {start: 0}
    order = [start]
    queue = deque([start])
    transition = {}
    while queue:
        current = queue.popleft()
        cid = numbering[current]
        for letter in alphabet:
            target = tuple(d.step(q, letter) for d, q in zip(dfas, current))
            if target not in numbering:
                if len(numbering) >= budget:
                    raise StateBudgetError("monitor product", budget)
                numbering[target] = len(numbering)
                order.append(target)
                queue.append(target)
            transition[(cid, letter)] = numbering[target]
    outputs = [output_fn(s) for s in order]
    return MooreMonitor(mode, props, len(numbering), 0, transition, outputs)


# --------------------------------------------------------------------------
# Minimization and canonical forms.
# --------------------------------------------------------------------------


def minimize_moore(m: MooreMonitor) -> MooreMonitor:
    """Unique minimal monitor computing the same verdict function.

    Partition refinement starting from the grouping by output value, then a
    canonical breadth-first renumbering.
    """
    reachable = _reachable_states(m)
    block = {q: str(m.outputs[q]) for q in reachable}
    n_blocks = len(set(block.values()))
    while True:
        signatures = {
            q: (block[q], tuple(block[m.transition[(q, a)]] for a in m.alphabet))
            for q in reachable
        }
        ids: dict = {}
        block = {}
        for q in reachable:
            sig = signatures[q]
            if sig not in ids:
                ids[sig] = len(ids)
            block[q] = ids[sig]
        if len(ids) == n_blocks:
            break
        n_blocks = len(ids)
    numbering = {block[m.initial]: 0}
    rep_outputs = {0: m.outputs[m.initial]}
    queue = deque([m.initial])
    transition = {}
    while queue:
        q = queue.popleft()
        bid = numbering[block[q]]
        for letter in m.alphabet:
            q2 = m.transition[(q, letter)]
            b2 = block[q2]
            if b2 not in numbering:
                numbering[b2] = len(numbering)
                rep_outputs[numbering[b2]] = m.outputs[q2]
                queue.append(q2)
            transition[(bid, letter)] = numbering[b2]
    outputs = [rep_outputs[i] for i in range(len(numbering))]
    return MooreMonitor(m.mode, m.props, len(numbering), 0, transition, outputs)


def _reachable_states(m: MooreMonitor) -> list[int]:
    seen = {m.initial}
    queue = deque([m.initial])
    order = [m.initial]
    while queue:
        q = queue.popleft()
        for letter in m.alphabet:
            q2 = m.transition[(q, letter)]
            if q2 not in seen:
                seen.add(q2)
                order.append(q2)
                queue.append(q2)
    return order


def monitors_isomorphic(a: MooreMonitor, b: MooreMonitor) -> bool:
    """Equality of verdict functions, decided on canonical minimal forms."""
    ca, cb = minimize_moore(a), minimize_moore(b)
    if (ca.mode, ca.props, ca.n_states) != (cb.mode, cb.props, cb.n_states):
        return False
    if [str(v) for v in ca.outputs] != [str(v) for v in cb.outputs]:
        return False
    return ca.transition == cb.transition


# --------------------------------------------------------------------------
# Analysis.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MonitorabilityResult:
    monitorable: bool
    ugly_state_count: int


def ugly_states(m: MooreMonitor) -> frozenset:
    """States from which every reachable state outputs the all-? verdict."""
    informative = {
        q for q in range(m.n_states) if not m.outputs[q].is_all_unknown
    }
    pred: dict[int, set[int]] = {q: set() for q in range(m.n_states)}
    for (q, _letter), q2 in m.transition.items():
        pred[q2].add(q)
    can_reach_informative = set(informative)
    queue = sorted(informative)
    while queue:
        q = queue.pop()
        for p in pred[q]:
            if p not in can_reach_informative:
                can_reach_informative.add(p)
                queue.append(p)
    return frozenset(range(m.n_states)) - frozenset(can_reach_informative)


def analyze_monitorability(m: MooreMonitor) -> MonitorabilityResult:
    """Monitorability: no reachable state is stuck at the all-? verdict."""
    minimized = minimize_moore(m)
    ugly = ugly_states(minimized)
    return MonitorabilityResult(monitorable=not ugly, ugly_state_count=len(ugly))


def reachable_verdicts(m: MooreMonitor) -> frozenset:
    """The set of verdicts over reachable states of a robust monitor."""
    if m.mode != RLTL_MODE:
        raise ValueError("reachable_verdicts applies to robust-mode monitors")
    return frozenset(m.outputs[q] for q in _reachable_states(m))


def check_impartiality(m: MooreMonitor) -> bool:
    """Every edge refines the verdict (definite cells are never revoked)."""
    for q in _reachable_states(m):
        for letter in m.alphabet:
            if not specificity_leq(m.outputs[q], m.outputs[m.transition[(q, letter)]]):
                return False
    return True


# --------------------------------------------------------------------------
# Compilation with reporting.
# --------------------------------------------------------------------------


def compile_with_report(formula: Formula, props=None,
                        budget: int = DEFAULT_STATE_BUDGET) -> tuple[MooreMonitor, MonitorReport]:
    """Build the monitor for a formula in its own flavor, with build metrics."""
    stage_sizes: dict = {}
    started = time.perf_counter()
    if formula.flavor == ROBUST:
        monitor = build_rltl_monitor(formula, props, budget, stage_sizes=stage_sizes)
    else:
        monitor = build_ltl3_monitor(formula, props, budget, stage_sizes=stage_sizes)
    build_ms = (time.perf_counter() - started) * 1000.0
    analysis = analyze_monitorability(monitor)
    report = MonitorReport(
        state_count=monitor.n_states,
        distinct_outputs=len({str(v) for v in monitor.outputs}),
        monitorable=analysis.monitorable,
        ugly_state_count=analysis.ugly_state_count,
        build_ms=build_ms,
        stage_sizes=stage_sizes,
    )
    return monitor, report


# --------------------------------------------------------------------------
# Serialization: versioned JSON artifact and DOT export.
# --------------------------------------------------------------------------


def monitor_to_json_dict(m: MooreMonitor) -> dict:
    rows = []
    for q in range(m.n_states):
        row = {}
        for letter in m.alphabet:
            key = ",".join(sorted(letter))
            row[key] = m.transition[(q, letter)]
        rows.append(row)
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "mode": m.mode,
        "props": list(m.props),
        "initial": m.initial,
        "outputs": [str(v) for v in m.outputs],
        "transitions": rows,
    }


def monitor_to_json(m: MooreMonitor) -> str:
    return json.dumps(monitor_to_json_dict(m), indent=2, sort_keys=True) + "\n"


def monitor_from_json_dict(data: dict) -> MooreMonitor:
    if data.get("format") != FORMAT_NAME:
        raise ValueError("not a monitor artifact")
    if data.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported artifact version: {data.get('version')!r}")
    mode = data["mode"]
    props = tuple(data["props"])
    outputs_raw = data["outputs"]
    if mode == RLTL_MODE:
        outputs = [Verdict4(text) for text in outputs_raw]
    elif mode == LTL3_MODE:
        outputs = [Verdict3(text) for text in outputs_raw]
    else:
        raise ValueError(f"unknown monitor mode: {mode!r}")
    rows = data["transitions"]
    transition = {}
    for q, row in enumerate(rows):
        for key, target in row.items():
            letter = frozenset(key.split(",")) if key else frozenset()
            transition[(q, letter)] = target
    m = MooreMonitor(mode, props, len(rows), data["initial"], transition, outputs)
    for q in range(m.n_states):
        for letter in m.alphabet:
            if (q, letter) not in m.transition:
                raise ValueError(f"artifact transition table is incomplete at state {q}")
    return m


def monitor_from_json(text: str) -> MooreMonitor:
    return monitor_from_json_dict(json.loads(text))


def monitor_to_dot(m: MooreMonitor, name: str = "monitor") -> str:
    ugly = ugly_states(m)
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  __init [shape=point, label=""];']
    for q in range(m.n_states):
        attrs = [f'label="{q}: {m.outputs[q]}"', "shape=box"]
        if q in ugly:
            attrs.append("style=dashed")
        lines.append(f"  q{q} [{', '.join(attrs)}];")
    lines.append(f"  __init -> q{m.initial};")
    grouped: dict[tuple[int, int], list[str]] = {}
    for q in range(m.n_states):
        for letter in m.alphabet:
            target = m.transition[(q, letter)]
            grouped.setdefault((q, target), []).append(letter_label(letter))
    for (q, target), labels in sorted(grouped.items()):
        lines.append(f'  q{q} -> q{target} [label="{" | ".join(labels)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# re-exported for callers that treat this module as the pipeline façade
__all__ = [
    "DEFAULT_STATE_BUDGET",
    "LTL3_MODE",
    "MonitorReport",
    "MonitorRun",
    "MonitorabilityResult",
    "MooreMonitor",
    "RLTL_MODE",
    "StateBudgetError",
    "TraceError",
    "analyze_monitorability",
    "build_ltl3_monitor",
    "build_rltl_monitor",
    "build_rltl_monitor_per_bit",
    "check_impartiality",
    "compile_with_report",
    "minimize_moore",
    "monitor_from_json",
    "monitor_from_json_dict",
    "monitor_to_dot",
    "monitor_to_json",
    "monitor_to_json_dict",
    "monitors_isomorphic",
    "reachable_verdicts",
    "ugly_states",
]
