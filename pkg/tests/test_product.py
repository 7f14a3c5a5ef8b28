import random

import pytest

from mcaret import logic as L
from mcaret.automata import Nfa
from mcaret.corpus import random_enhanced, random_formula, random_nfa, sys1
from mcaret.logic import parse_formula
from mcaret.mpds import BOT, CALL
from mcaret.oracle import base_lassos, check_witness, explore, find_accepting_lasso
from mcaret.product import Product, augment, is_product_step, project, unrolled
from mcaret.semantics import evaluate
from mcaret.solver import ProductSystem


def contains_a():
    return Nfa("A", ("q0", "q1"), frozenset({"q0"}), frozenset({"q1"}),
               (("q0", BOT, "q0"), ("q0", "a", "q1"), ("q1", "a", "q1"), ("q1", BOT, "q1")))


def test_initial_states_contain_formula(m1):
    p = Product(m1, parse_formula("g0@1"))
    inits = p.initial_states("g0", 1)
    assert len(inits) == 1
    S = inits[0]
    assert S.g == "g0" and S.s == 1 and S.alive == (True,) and S.rets == (False,)
    assert S.atoms[0] & p.cl.bit(L.state("g0", 1))


def test_no_initial_state_for_false_formula(m1):
    assert Product(m1, parse_formula("g1@1")).initial_states("g0", 1) == []


def test_initial_states_forbid_caller_next(m1):
    p = Product(m1, parse_formula("Xc[1] true"))
    assert p.initial_states("g0", 1) == []


def test_other_stacks_may_start_dead(m2):
    p = Product(m2, parse_formula("g0@1"))
    inits = p.initial_states("g0", 1)
    assert any(not S.alive[1] and S.atoms[1] == 0 for S in inits)
    assert any(S.alive[1] for S in inits)


def test_family_size():
    f = parse_formula("(g0@1 U g1@1) | (g0@1 Ua[1] g1@1) | (true Ua[2] g0@2)")
    p = Product(sys1_two(), f)
    assert len(p.acceptance_family()) == 1 + 2 + 2 * 2


def sys1_two():
    from mcaret.mpds import Rule, make_enhanced
    return make_enhanced(("g0", "g1"), 2, ("a",), (
        Rule(1, ("g0", 1), BOT, ("g1", 1), CALL, "a"),
        Rule(1, ("g1", 1), "a", ("g0", 2), "internal", "a"),
        Rule(2, ("g0", 2), BOT, ("g0", 2), "internal", BOT),
    ), ("g0", 1))


def test_global_state_count(m1):
    p = Product(m1, parse_formula("g0@1"))
    # one atom per base state on stack 1: 2 * (2 * 2 + 1)
    assert p.global_state_count() == 2 * 1 * (2 * 2 + 1)


def test_derived_operators_are_rewritten(m1):
    p = Product(m1, parse_formula("G F g0@1"))
    assert L.is_primitive(p.formula)


def _check_augmented(p, lasso):
    aug = augment(p, lasso)
    run = aug.run
    for t in range(aug.length):
        assert is_product_step(p, run.configs[t], run.configs[t + 1], run.rules[t]), t
    for name, pred in p.acceptance_family():
        assert any(pred(run.configs[t].state) for t in range(aug.loop, aug.length)), name
    return aug


@pytest.mark.parametrize("text", ["g0@1", "X g0@1", "Xa[1] g1@1", "G F g0@1",
                                  "(call | int) Ua[1] g1@1", "F in(1, A)", "ret Uc[1] call | g0@1"])
def test_augmented_sys1_lasso_is_accepting(sys1_lasso, text):
    f = parse_formula(text, automata={"A": None})
    p = Product(sys1(), f, {"A": contains_a()})
    if not evaluate(sys1_lasso, 0, f, p.automata, enhanced=True):
        pytest.skip("formula false on this lasso")
    aug = _check_augmented(p, sys1_lasso)
    assert aug.run.configs[0].state in p.initial_states("g0", 1)


def test_pushed_letter_records_caller_atom(sys1_lasso):
    p = Product(sys1(), parse_formula("Xa[1] g1@1"))
    aug = augment(p, sys1_lasso)
    run = aug.run
    calls = [t for t in range(aug.length) if run.actions[t] == CALL]
    assert calls
    for t in calls:
        s = run.active[t]
        pushed = run.configs[t + 1].stacks[s - 1][-1]
        assert pushed.atom == run.configs[t].state.atoms[s - 1]
        assert pushed.ret == run.configs[t].state.rets[s - 1]


def test_regularity_tracker(sys1_lasso):
    p = Product(sys1(), parse_formula("in(1, A)", automata={"A": None}), {"A": contains_a()})
    aug = augment(p, sys1_lasso)
    for c in aug.run.configs:
        S = c.state
        word = [x.letter for x in c.stacks[0]]
        assert contains_a().accepts(word) == (next(iter(S.regs[0])) == "q1")


def test_projection_inverts_augmentation(sys1_lasso):
    p = Product(sys1(), parse_formula("G F g0@1"))
    aug = augment(p, sys1_lasso)
    base = project(aug)
    n = 12
    assert [c for c in unrolled(base, n)] == unrolled(sys1_lasso, n)


@pytest.mark.parametrize("seed", range(6))
def test_random_augmentations(seed):
    rng = random.Random(seed)
    checked = 0
    while checked < 8:
        m = random_enhanced(rng, n=2, n_states=2, n_letters=2, density=0.9)
        autos = {"A": random_nfa(rng, "A", [a for a in m.alphabet if a != BOT])}
        for lasso in base_lassos(m, ("g0", 1), 3, 6):
            f = L.rewrite_derived(random_formula(rng, rng.randint(1, 6), m.base_states, 2,
                                                 autos), 2)
            if not evaluate(lasso, 0, f, autos, enhanced=True):
                f = L.neg(f)
            p = Product(m, f, autos)
            aug = _check_augmented(p, lasso)
            assert aug.run.configs[0].state in p.initial_states("g0", 1)
            checked += 1
            break


def test_product_lassos_project_to_models(m1):
    f = parse_formula("G F g0@1")
    p = Product(m1, f)
    g = explore(ProductSystem(p), p.initial_states("g0", 1), 4, k=1)
    kind, lasso = find_accepting_lasso(g, [pr for _, pr in p.acceptance_family()])
    assert kind == "lasso"
    check_witness(m1, f, 1, lasso)
