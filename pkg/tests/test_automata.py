"""Automata pipeline tests: compilation, emptiness, determinization."""

import itertools
import random

import pytest

from corpus import A, E, all_words, lasso, random_formula, random_lasso
from rltl import (
    CLASSICAL,
    ROBUST,
    TruthValue,
    eval_ltl_lasso,
    eval_rltl_lasso,
    parse,
)
from rltl.automata import (
    AlphabetError,
    BuchiAutomaton,
    Dfa,
    Nfa,
    StateBudgetError,
    accepts_lasso,
    buchi_intersection,
    determinize,
    dfa_minimize,
    letter_label,
    live_states,
    ltl_to_buchi,
    make_alphabet,
    prefix_nfa,
    product_language_of_truth_value,
    to_dot,
    trim_buchi,
)

AB = frozenset({"a", "b"})


def classical(text):
    return parse(text, flavor=CLASSICAL)


class TestAlphabet:
    def test_materializes_all_letters(self):
        letters = make_alphabet(["a", "b"])
        assert set(letters) == {frozenset(), A, frozenset({"b"}), AB}

    def test_alphabet_cap(self):
        with pytest.raises(AlphabetError):
            make_alphabet([f"p{i}" for i in range(17)])

    def test_letter_label(self):
        assert letter_label(frozenset()) == "{}"
        assert letter_label(AB) == "a,b"


class TestLtlToBuchi:
    def test_safety_invariant(self):
        automaton = ltl_to_buchi(classical("G a"), ["a"])
        assert accepts_lasso(automaton, lasso([], [A]))
        assert not accepts_lasso(automaton, lasso([A], [E]))
        assert not accepts_lasso(automaton, lasso([E], [A]))

    def test_contradiction_has_empty_language(self):
        automaton = ltl_to_buchi(classical("a & !a"), ["a"])
        assert not live_states(automaton)

    def test_eventually_always(self):
        automaton = ltl_to_buchi(classical("F G a"), ["a"])
        assert accepts_lasso(automaton, lasso([E], [A]))
        assert not accepts_lasso(automaton, lasso([], [A, E]))

    def test_language_soundness_on_random_formulas(self):
        rng = random.Random(2024)
        for _ in range(150):
            phi = random_formula(rng, 4, ["a", "b"], CLASSICAL)
            automaton = ltl_to_buchi(phi, ["a", "b"])
            for _ in range(8):
                word = random_lasso(rng, ["a", "b"], max_stem=3, max_loop=3)
                assert accepts_lasso(automaton, word) == eval_ltl_lasso(word, phi)

    def test_alphabet_must_cover_atoms(self):
        from rltl.syntax import FormulaError

        with pytest.raises(FormulaError):
            ltl_to_buchi(classical("G a"), ["b"])

    def test_budget_error_names_stage(self):
        with pytest.raises(StateBudgetError) as err:
            ltl_to_buchi(classical("a U (b U (a U b))"), ["a", "b"], budget=2)
        assert "tableau" in str(err.value) or "degeneralization" in str(err.value)


class TestIntersection:
    def test_contradictory_intersection_is_empty(self):
        left = ltl_to_buchi(classical("G a"), ["a"])
        right = ltl_to_buchi(classical("F !a"), ["a"])
        assert not live_states(buchi_intersection(left, right))

    def test_infinitely_often_both(self):
        left = ltl_to_buchi(classical("G F a"), ["a"])
        right = ltl_to_buchi(classical("G F !a"), ["a"])
        product = buchi_intersection(left, right)
        assert accepts_lasso(product, lasso([], [A, E]))
        assert not accepts_lasso(product, lasso([], [A]))

    def test_universal_automaton_is_identity(self):
        rng = random.Random(7)
        automaton = ltl_to_buchi(classical("F (a & X b)"), ["a", "b"])
        universal = ltl_to_buchi(classical("true"), ["a", "b"])
        product = buchi_intersection(automaton, universal)
        for _ in range(40):
            word = random_lasso(rng, ["a", "b"], max_stem=3, max_loop=3)
            assert accepts_lasso(product, word) == accepts_lasso(automaton, word)

    def test_alphabets_must_match(self):
        with pytest.raises(ValueError):
            buchi_intersection(
                ltl_to_buchi(classical("G a"), ["a"]),
                ltl_to_buchi(classical("G b"), ["b"]),
            )


def _live_states_nested_dfs(automaton):
    """Per-state emptiness oracle: a state is live iff some accepting state
    is reachable from it and lies on a cycle."""
    n = automaton.n_states
    succ = [set() for _ in range(n)]
    for (q, _letter), targets in automaton.transitions.items():
        succ[q] |= targets

    def reachable_from(q):
        seen = {q}
        stack = [q]
        while stack:
            v = stack.pop()
            for w in succ[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    def on_cycle(f):
        return any(f in succ[v] for v in reachable_from(f))

    live = set()
    for q in range(n):
        for f in reachable_from(q):
            if f in automaton.accepting and on_cycle(f):
                live.add(q)
                break
    return frozenset(live)


class TestLiveStates:
    def test_contradiction_has_no_live_state(self):
        automaton = ltl_to_buchi(classical("a & !a"), ["a"])
        assert live_states(automaton) == frozenset()

    def test_accepting_self_loop(self):
        letters = make_alphabet(["a"])
        transitions = {(0, letter): frozenset({1}) for letter in letters}
        transitions.update({(1, letter): frozenset({1}) for letter in letters})
        automaton = BuchiAutomaton(letters, 2, 0, transitions, {1})
        assert live_states(automaton) == frozenset({0, 1})

    def test_matches_nested_dfs_oracle(self):
        rng = random.Random(11)
        for _ in range(120):
            phi = random_formula(rng, 4, ["a", "b"], CLASSICAL)
            automaton = ltl_to_buchi(phi, ["a", "b"])
            if automaton.n_states <= 50:
                assert live_states(automaton) == _live_states_nested_dfs(automaton)


class TestPrefixNfa:
    def test_always_value_prefixes(self):
        automaton = product_language_of_truth_value(parse("G a"), TruthValue.T1111, ["a"])
        nfa = prefix_nfa(automaton)
        for n in range(5):
            assert nfa.accepts([A] * n)
        assert not nfa.accepts([A, E])
        assert not nfa.accepts([E])

    def test_empty_language_rejects_everything(self):
        nfa = prefix_nfa(ltl_to_buchi(classical("a & !a"), ["a"]))
        assert not nfa.accepts([])
        assert not nfa.accepts([A])

    def test_universal_accepts_everything(self):
        nfa = prefix_nfa(ltl_to_buchi(classical("true"), ["a"]))
        for word in itertools.product([A, E], repeat=3):
            assert nfa.accepts(word)

    def test_extension_witness_matches_robust_values(self):
        # prefix accepted iff some sampled lasso extension reaches the value
        phi = parse("G a")
        rng = random.Random(3)
        family = [random_lasso(rng, ["a"], max_stem=2, max_loop=2) for _ in range(60)]
        for value in TruthValue:
            nfa = prefix_nfa(product_language_of_truth_value(phi, value, ["a"]))
            for length in range(4):
                for word in itertools.product([A, E], repeat=length):
                    accepted = nfa.accepts(word)
                    witnessed = any(
                        eval_rltl_lasso(ext.prepend(word), phi) == value for ext in family
                    )
                    if witnessed:
                        assert accepted
                    if not accepted:
                        assert not witnessed


def _extract_accepting_lasso(automaton, prefix):
    """Extend a finite word into an accepted lasso by walking the automaton:
    reach an accepting state on a cycle, then pump that cycle."""
    from collections import deque

    current = {automaton.initial}
    for letter in prefix:
        current = {q2 for q in current for q2 in automaton.successors(q, letter)}

    def search(starts, targets):
        queue = deque((q, ()) for q in sorted(starts))
        seen = set(starts)
        while queue:
            q, path = queue.popleft()
            for letter in automaton.alphabet:
                for q2 in sorted(automaton.successors(q, letter)):
                    if q2 in targets:
                        return path + (letter,), q2
                    if q2 not in seen:
                        seen.add(q2)
                        queue.append((q2, path + (letter,)))
        return None, None

    from rltl import LassoWord

    for accepting in sorted(automaton.accepting):
        if accepting in current:
            stem_rest = ()
        else:
            stem_rest, _ = search(current, {accepting})
            if stem_rest is None:
                continue
        loop, _ = search({accepting}, {accepting})
        if loop is None:
            continue
        return LassoWord(tuple(prefix) + stem_rest, loop)
    return None


class TestWitnessExtraction:
    def test_accepted_prefixes_have_extractable_witnesses(self):
        # whenever the prefix automaton accepts a word, an accepting lasso
        # extension can be pulled out of the underlying automaton and its
        # robust value matches the automaton's truth value
        phi = parse("G a")
        for value in TruthValue:
            automaton = product_language_of_truth_value(phi, value, ["a"])
            nfa = prefix_nfa(automaton)
            for length in range(4):
                for word in itertools.product([A, E], repeat=length):
                    if not nfa.accepts(word):
                        continue
                    witness = _extract_accepting_lasso(automaton, word)
                    assert witness is not None, (value, word)
                    assert eval_rltl_lasso(witness, phi) == value


class TestTrim:
    def test_preserves_language_and_prefixes(self):
        rng = random.Random(13)
        for _ in range(60):
            phi = random_formula(rng, 4, ["a", "b"], CLASSICAL)
            automaton = ltl_to_buchi(phi, ["a", "b"])
            trimmed = trim_buchi(automaton)
            assert trimmed.n_states <= automaton.n_states
            for _ in range(6):
                word = random_lasso(rng, ["a", "b"], max_stem=2, max_loop=2)
                assert accepts_lasso(trimmed, word) == accepts_lasso(automaton, word)
            full, cut = prefix_nfa(automaton), prefix_nfa(trimmed)
            for length in range(3):
                for word in itertools.product(make_alphabet(["a", "b"]), repeat=length):
                    assert full.accepts(word) == cut.accepts(word)


class TestValueLanguages:
    def test_always_full_satisfaction_language(self):
        automaton = product_language_of_truth_value(parse("G a"), TruthValue.T1111, ["a"])
        assert accepts_lasso(automaton, lasso([], [A]))
        assert not accepts_lasso(automaton, lasso([A], [E]))

    def test_always_infinitely_often_language(self):
        automaton = product_language_of_truth_value(parse("G a"), TruthValue.T0011, ["a"])
        assert accepts_lasso(automaton, lasso([], [E, A]))
        assert accepts_lasso(automaton, lasso([], [A, E]))
        assert not accepts_lasso(automaton, lasso([E], [A]))

    def test_contradiction_full_value_is_empty(self):
        automaton = product_language_of_truth_value(parse("a & !a"), TruthValue.T1111, ["a"])
        assert not live_states(automaton)


class TestSimplifier:
    def test_language_preserved(self):
        from rltl.automata import _nnf, _simplify
        from rltl.syntax import Formula

        rng = random.Random(1234)
        for _ in range(250):
            phi = random_formula(rng, 5, ["a", "b"], CLASSICAL)
            simplified = Formula(_simplify(_nnf(phi.root)), CLASSICAL)
            for _ in range(8):
                word = random_lasso(rng, ["a", "b"], max_stem=3, max_loop=3)
                assert eval_ltl_lasso(word, phi) == eval_ltl_lasso(word, simplified), phi


class TestPartitionOfWords:
    def test_five_value_languages_partition_sampled_lassos(self):
        rng = random.Random(17)
        for text in ("G a", "a R a", "F (a & G !F a)", "G a & G !a"):
            phi = parse(text)
            automata = {
                value: product_language_of_truth_value(phi, value, ["a"])
                for value in TruthValue
            }
            for _ in range(40):
                word = random_lasso(rng, ["a"], max_stem=3, max_loop=3)
                members = [value for value, aut in automata.items() if accepts_lasso(aut, word)]
                assert members == [eval_rltl_lasso(word, phi)]


class TestDeterminize:
    def test_textbook_ends_with_b(self):
        # NFA for (a|b)* b over a two-letter alphabet
        letters = make_alphabet(["b"])
        b_letter = frozenset({"b"})
        plain = frozenset()
        transitions = {
            (0, b_letter): frozenset({0, 1}),
            (0, plain): frozenset({0}),
        }
        nfa = Nfa(letters, 2, 0, transitions, {1})
        dfa = determinize(nfa)
        assert dfa.n_states == 2
        for word in all_words(letters, 8):
            assert dfa.accepts(word) == (len(word) > 0 and word[-1] == b_letter)

    def test_deterministic_input_stays_small(self):
        letters = make_alphabet(["a"])
        a_letter = frozenset({"a"})
        transitions = {
            (0, a_letter): frozenset({1}),
            (1, a_letter): frozenset({1}),
            (1, frozenset()): frozenset({0}),
        }
        nfa = Nfa(letters, 2, 0, transitions, {1})
        dfa = determinize(nfa)
        assert dfa.n_states <= nfa.n_states + 1
        for word in all_words(letters, 7):
            assert dfa.accepts(word) == nfa.accepts(word)

    def test_empty_language_nfa(self):
        letters = make_alphabet(["a"])
        transitions = {(0, letter): frozenset({0}) for letter in letters}
        nfa = Nfa(letters, 1, 0, transitions, set())
        dfa = determinize(nfa)
        assert dfa.n_states == 1
        assert dfa_minimize(determinize(Nfa(letters, 1, 0, {}, set()))).n_states == 1

    def test_budget(self):
        letters = make_alphabet(["a"])
        transitions = {(0, letter): frozenset({0, 1}) for letter in letters}
        transitions.update({(1, letter): frozenset({0}) for letter in letters})
        nfa = Nfa(letters, 2, 0, transitions, {1})
        with pytest.raises(StateBudgetError) as err:
            determinize(nfa, budget=1)
        assert "determinization" in str(err.value)


def _table_filling_minimize(dfa):
    """Brute-force DFA minimization oracle: mark distinguishable pairs."""
    reachable = set()
    queue = [dfa.initial]
    while queue:
        q = queue.pop()
        if q in reachable:
            continue
        reachable.add(q)
        for letter in dfa.alphabet:
            queue.append(dfa.step(q, letter))
    states = sorted(reachable)
    distinct = {
        (p, q)
        for p in states
        for q in states
        if (p in dfa.accepting) != (q in dfa.accepting)
    }
    changed = True
    while changed:
        changed = False
        for p in states:
            for q in states:
                if (p, q) in distinct:
                    continue
                for letter in dfa.alphabet:
                    if (dfa.step(p, letter), dfa.step(q, letter)) in distinct:
                        distinct.add((p, q))
                        distinct.add((q, p))
                        changed = True
                        break
    classes = set()
    for p in states:
        classes.add(frozenset(q for q in states if (p, q) not in distinct))
    return len(classes)


class TestDfaMinimize:
    def test_already_minimal_is_isomorphic(self):
        letters = make_alphabet(["a"])
        a_letter = frozenset({"a"})
        transition = {
            (0, a_letter): 1, (0, frozenset()): 0,
            (1, a_letter): 0, (1, frozenset()): 1,
        }
        dfa = Dfa(letters, 2, 0, transition, {1})
        minimized = dfa_minimize(dfa)
        assert minimized.n_states == 2
        for word in all_words(letters, 7):
            assert minimized.accepts(word) == dfa.accepts(word)

    def test_bisimilar_states_merge(self):
        letters = make_alphabet(["a"])
        a_letter = frozenset({"a"})
        # states 1 and 2 are interchangeable accepting sinks
        transition = {
            (0, a_letter): 1, (0, frozenset()): 2,
            (1, a_letter): 1, (1, frozenset()): 2,
            (2, a_letter): 1, (2, frozenset()): 2,
        }
        dfa = Dfa(letters, 3, 0, transition, {1, 2})
        assert dfa_minimize(dfa).n_states == 2

    def test_against_table_filling_oracle(self):
        rng = random.Random(23)
        letters = make_alphabet(["a"])
        for _ in range(80):
            n = rng.randrange(2, 9)
            transition = {
                (q, letter): rng.randrange(n) for q in range(n) for letter in letters
            }
            accepting = {q for q in range(n) if rng.random() < 0.4}
            dfa = Dfa(letters, n, 0, transition, accepting)
            minimized = dfa_minimize(dfa)
            assert minimized.n_states == _table_filling_minimize(dfa)
            for word in all_words(letters, 6):
                assert minimized.accepts(word) == dfa.accepts(word)

    def test_language_preserved_exhaustively(self):
        # binary alphabet: every word up to length 10
        rng = random.Random(29)
        letters = make_alphabet(["a"])
        phi = random_formula(rng, 4, ["a"], CLASSICAL)
        nfa = prefix_nfa(ltl_to_buchi(phi, ["a"]))
        dfa = determinize(nfa)
        minimized = dfa_minimize(dfa)
        for word in all_words(letters, 10):
            expected = nfa.accepts(word)
            assert dfa.accepts(word) == expected
            assert minimized.accepts(word) == expected

    def test_language_preserved_four_letters(self):
        letters = make_alphabet(["a", "b"])
        phi = classical("F (a & X b)")
        nfa = prefix_nfa(ltl_to_buchi(phi, ["a", "b"]))
        dfa = determinize(nfa)
        minimized = dfa_minimize(dfa)
        for word in all_words(letters, 6):
            expected = nfa.accepts(word)
            assert dfa.accepts(word) == expected
            assert minimized.accepts(word) == expected


class TestDotExport:
    def test_automaton_dot(self):
        automaton = ltl_to_buchi(classical("F a"), ["a"])
        dot = to_dot(automaton)
        assert dot.startswith("digraph")
        assert "doublecircle" in dot
        assert "{}" in dot  # the empty letter renders as {}

    def test_dfa_dot(self):
        dfa = determinize(prefix_nfa(ltl_to_buchi(classical("G a"), ["a"])))
        dot = to_dot(dfa, name="prefixes")
        assert "digraph prefixes" in dot
        assert "__init -> q0" in dot
