import random

import pytest
from hypothesis import given, strategies as st

from mcaret.corpus import random_enhanced
from mcaret.mpds import (BOT, CALL, INTERNAL, RETURN, Config, LassoRun, Mpds, MpdsError, Rule,
                         enhance, initial_config, is_k_bounded, is_k_phase_bounded,
                         is_order_bounded, replay, step, successors)


def one_stack(rules):
    return Mpds(("g0", "g1"), 1, ("a",), tuple(rules), ("g0", 1))


def test_call_pushes_on_top():
    m = one_stack([Rule(1, "g0", BOT, "g0", CALL, "a")])
    assert step(m, Config("g0", ((BOT,),)), m.rules[0]) == Config("g0", ((BOT, "a"),))


def test_return_pops():
    m = one_stack([Rule(1, "g0", "a", "g1", RETURN, "a")])
    assert step(m, Config("g0", ((BOT, "a"),)), m.rules[0]) == Config("g1", ((BOT,),))


def test_internal_replaces_top():
    m = Mpds(("g0",), 1, ("a", "b"), (Rule(1, "g0", "a", "g0", INTERNAL, "b"),))
    assert step(m, Config("g0", ((BOT, "a"),)), m.rules[0]).stacks == ((BOT, "b"),)


@pytest.mark.parametrize("rule", [
    Rule(1, "g0", BOT, "g1", RETURN, BOT),
    Rule(1, "g0", BOT, "g1", CALL, BOT),
    Rule(1, "g0", BOT, "g1", INTERNAL, "a"),
    Rule(1, "g0", "a", "g1", INTERNAL, BOT),
    Rule(1, "g0", "a", "g1", RETURN, "b"),
])
def test_bottom_discipline_is_enforced(rule):
    with pytest.raises(MpdsError):
        Mpds(("g0", "g1"), 1, ("a", "b"), (rule,))


def test_step_rejects_wrong_top():
    m = one_stack([Rule(1, "g0", "a", "g1", RETURN, "a")])
    with pytest.raises(MpdsError):
        step(m, Config("g0", ((BOT,),)), m.rules[0])


def test_bottom_self_loop_allowed():
    m = one_stack([Rule(1, "g0", BOT, "g0", INTERNAL, BOT)])
    assert step(m, initial_config("g0", 1), m.rules[0]) == initial_config("g0", 1)


def test_enhance_one_stack_pairs_with_index_one():
    m = one_stack([Rule(1, "g0", BOT, "g0", CALL, "a"), Rule(1, "g0", "a", "g1", RETURN, "a")])
    e = enhance(m)
    assert e.states == (("g0", 1), ("g1", 1))
    assert [(r.source, r.target) for r in e.rules] == [(("g0", 1), ("g0", 1)),
                                                      (("g0", 1), ("g1", 1))]


def test_enhance_splits_rules_per_next_stack():
    m = Mpds(("g0",), 2, ("a",), (Rule(1, "g0", BOT, "g0", CALL, "a"),
                                  Rule(2, "g0", BOT, "g0", CALL, "a")), ("g0", 1))
    e = enhance(m)
    assert set(e.states) == {("g0", 1), ("g0", 2)}
    assert len(e.rules) == 4
    assert {r.target for r in e.rules if r.stack == 1} == {("g0", 1), ("g0", 2)}


def _runs(m, start, length, enhanced):
    """All (stacks sequence, active, actions) of runs with exactly ``length`` steps."""
    out = set()

    def rec(c, stacks, active, actions):
        if len(active) == length:
            out.add((tuple(stacks), tuple(active), tuple(actions)))
            return
        for r, d in successors(m, c):
            rec(d, stacks + [d.stacks], active + [r.stack], actions + [r.action])

    rec(start, [start.stacks], [], [])
    return out


@pytest.mark.parametrize("seed", range(12))
def test_enhanced_runs_match_original_runs(seed):
    rng = random.Random(seed)
    e0 = random_enhanced(rng, n=2, n_states=rng.randint(1, 3), n_letters=2, density=0.8)
    # forget the stack component of targets to get a plain system
    plain_rules = {Rule(r.stack, r.source[0], r.top, r.target[0], r.action, r.letter)
                   for r in e0.rules}
    m = Mpds(e0.base_states, 2, ("a", "b"), tuple(sorted(plain_rules, key=str)), ("g0", 1))
    e = enhance(m)
    for length in range(1, 6):
        orig = _runs(m, initial_config("g0", 2), length, False)
        lifted = set()
        for s in (1, 2):
            lifted |= _runs(e, initial_config(("g0", s), 2), length, True)
        assert orig == lifted


def test_successors_sys1(m1):
    succ = successors(m1, initial_config(("g0", 1), 1))
    assert [(r.rid, c) for r, c in succ] == [(0, Config(("g0", 1), ((BOT, "a"),)))]


def test_successors_none(m1):
    assert successors(m1, Config(("g1", 1), ((BOT, "a"),))) == []


def test_successors_nondeterministic(m1):
    assert len(successors(m1, initial_config(("g1", 1), 1))) == 2


def test_k_bounded_examples():
    assert is_k_bounded([1, 1, 1], 1, loop=0)
    assert not any(is_k_bounded([1, 2, 1, 2], k, loop=0) for k in range(1, 10))
    assert is_k_bounded([1, 1, 2, 2, 2], 2, loop=3)
    assert not is_k_bounded([1, 1, 2, 2, 2], 1, loop=3)
    with pytest.raises(ValueError):
        is_k_bounded([1], 0)


def test_k_bounded_cycle_wraparound():
    assert is_k_bounded([1, 2, 2], 2, loop=1)
    assert not is_k_bounded([1, 2, 2], 1, loop=1)
    assert not is_k_bounded([2, 1, 2], 5, loop=1)  # cycle 1,2 switches


@given(st.lists(st.integers(1, 3), min_size=1, max_size=12), st.integers(1, 6))
def test_k_bounded_monotone(seq, k):
    if is_k_bounded(seq, k):
        assert is_k_bounded(seq, k + 1)


@given(st.lists(st.integers(1, 3), min_size=1, max_size=12))
def test_one_bounded_means_constant(seq):
    assert is_k_bounded(seq, 1) == (len(set(seq)) == 1)


def test_phase_bounded_examples():
    assert is_k_phase_bounded([1, 2, 1], [CALL, INTERNAL, CALL], 1)
    acts = [RETURN, RETURN, RETURN]
    assert not is_k_phase_bounded([1, 2, 1], acts, 2)
    assert is_k_phase_bounded([1, 2, 1], acts, 3)


def test_order_bounded_example():
    m = Mpds(("g",), 2, ("a",), (Rule(1, "g", BOT, "g", CALL, "a"),
                                 Rule(2, "g", BOT, "g", CALL, "a"),
                                 Rule(2, "g", "a", "g", RETURN, "a")), ("g", 1))
    run = replay(m, initial_config("g", 2), [0, 1, 2])
    assert not is_order_bounded(run, [1, 2])
    assert is_order_bounded(run, [2, 1])


def test_lasso_must_close():
    m = one_stack([Rule(1, "g0", BOT, "g0", CALL, "a")])
    run = replay(m, initial_config("g0", 1), [0])
    with pytest.raises(MpdsError):
        LassoRun(run, 0)


def test_step_keeps_single_bottom():
    rng = random.Random(3)
    for _ in range(30):
        e = random_enhanced(rng, n=2, n_letters=2, layered=False)
        c = initial_config((e.base_states[0], 1), 2)
        for _ in range(20):
            succ = successors(e, c)
            if not succ:
                break
            c = rng.choice(succ)[1]
            for w in c.stacks:
                assert w[0] == BOT and BOT not in w[1:]


def test_rule_ids_follow_declaration_order(m1):
    assert [r.rid for r in m1.rules] == list(range(len(m1.rules)))


def test_enhance_state_count():
    m = Mpds(("a1", "a2", "a3"), 2, (), ())
    assert len(enhance(m).states) == 6


def test_replay_prefixes():
    m = one_stack([Rule(1, "g0", BOT, "g0", CALL, "a"), Rule(1, "g0", "a", "g1", RETURN, "a"),
                   Rule(1, "g1", BOT, "g0", INTERNAL, BOT)])
    ids = [0, 1, 2] * 3
    for n in range(len(ids) + 1):
        run = replay(m, initial_config("g0", 1), ids[:n])
        assert len(run.configs) == n + 1
        assert len(run.active) == len(run.actions) == n
