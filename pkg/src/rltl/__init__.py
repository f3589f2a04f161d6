"""Robust LTL monitoring: five-valued verdicts for finite traces.

Robust formulas evaluate over infinite words to one of five monotone
truth values; a compiled monitor reports, after every event of a finite
trace, which bits of that value the prefix already determines.
"""

from .automata import (
    DEFAULT_STATE_BUDGET,
    BuchiAutomaton,
    Dfa,
    Nfa,
    StateBudgetError,
    accepts_lasso,
    buchi_intersection,
    determinize,
    dfa_minimize,
    live_states,
    ltl_to_buchi,
    make_alphabet,
    prefix_nfa,
    product_language_of_truth_value,
    to_dot,
)
from .monitor import (
    LTL3_MODE,
    RLTL_MODE,
    MonitorReport,
    MonitorRun,
    MooreMonitor,
    TraceError,
    analyze_monitorability,
    build_ltl3_monitor,
    build_rltl_monitor,
    build_rltl_monitor_per_bit,
    check_impartiality,
    compile_with_report,
    minimize_moore,
    monitor_from_json,
    monitor_to_dot,
    monitor_to_json,
    monitors_isomorphic,
    reachable_verdicts,
)
from .semantics import (
    LassoWord,
    Letter,
    TruthValue,
    Verdict3,
    Verdict4,
    eval_ltl_lasso,
    eval_rltl_lasso,
    ltl_bit,
    specificity_leq,
    truth_value_leq,
    xi,
)
from .syntax import (
    CLASSICAL,
    ROBUST,
    Formula,
    FormulaError,
    ParseError,
    UnknownPropositionError,
    desugar,
    format_formula,
    fragment_of,
    parse,
    reinterpret,
    rewrite_implications,
)

__version__ = "0.1.0"
