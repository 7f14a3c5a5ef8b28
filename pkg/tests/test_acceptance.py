"""End-to-end acceptance checks; each prints one PASS/FAIL line."""
import math
import random
import time

import pytest

from mcaret import logic as L
from mcaret.closure import atoms, closure, stack_atoms
from mcaret.corpus import (random_enhanced, random_formula, random_instance, random_nfa,
                           random_pds, sys1, sys2)
from mcaret.logic import parse_formula
from mcaret.mpds import BOT, CALL, INTERNAL, Rule, make_enhanced
from mcaret.oracle import base_lassos, cross_check, oracle_bmc
from mcaret.pda import ExplicitPds, config_automaton, post_star, pre_star
from mcaret.product import Product, augment, is_product_step, project, unrolled
from mcaret.semantics import evaluate
from mcaret.solver import bmc, brep_single

from oracles import bfs, brute_atoms, configs_up_to


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}")
    return emit


# ------------------------------------------------------------------------ 1

def test_1_atoms_match_exhaustive_filtering(report):
    rng = random.Random(11)
    t0 = time.perf_counter()
    done = mismatches = 0
    while done < 200:
        n = rng.randint(1, 2)
        states = [f"g{i}" for i in range(rng.randint(1, 3))]
        autos = ("A",) if rng.random() < 0.3 else ()
        f = L.rewrite_derived(random_formula(rng, rng.randint(1, 6), states, n, autos), n)
        cl = closure(f, states, n)
        if len(cl) > 14:
            continue
        done += 1
        if set(atoms(cl)) != brute_atoms(cl):
            mismatches += 1
        for j in range(1, n + 1):
            if set(stack_atoms(cl, j)) != brute_atoms(cl, j):
                mismatches += 1
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and dt < 10
    report(1, ok, f"{done} formulas, {mismatches} mismatches, {dt:.2f}s (limit 10s)")
    assert mismatches == 0
    assert dt < 10


# ------------------------------------------------------------------------ 2

def test_2_saturation_cross_validation(report):
    rng = random.Random(22)
    t0 = time.perf_counter()
    pairs = mismatches = bfs_checks = 0
    states = ["p0", "p1", "p2", "p3"]
    for i in range(100):
        ns, nl = rng.randint(1, 4), rng.randint(1, 3)
        acyclic = i % 2 == 0
        rules = random_pds(rng, ns, nl, 8, acyclic_push=acyclic)
        pds = ExplicitPds(rules)
        letters = ["a", "b", "c"][:nl]
        configs = configs_up_to(states[:ns], letters, 4)
        post, pre = {}, {}
        for _ in range(500):
            c, d = rng.choice(configs), rng.choice(configs)
            if c not in post:
                post[c] = post_star(pds, config_automaton([c]))
            if d not in pre:
                pre[d] = pre_star(pds, config_automaton([d]))
            pairs += 1
            if post[c].accepts_config(*d) != pre[d].accepts_config(*c):
                mismatches += 1
        if acyclic:
            H = nl + 1
            c0 = ("p0", (BOT,))
            B = post_star(pds, config_automaton([c0]))
            reach = bfs(rules, c0, H)
            for c in configs_up_to(states[:ns], letters, H + 1):
                bfs_checks += 1
                if B.accepts_config(*c) != (c in reach):
                    mismatches += 1
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and dt < 30
    report(2, ok, f"100 systems, {pairs} duality pairs, {bfs_checks} BFS checks, "
                  f"{mismatches} mismatches, {dt:.2f}s (limit 30s)")
    assert mismatches == 0
    assert dt < 30


# ------------------------------------------------------------------------ 3

def handoff():
    return make_enhanced(("g0", "g1"), 2, ("a",), (
        Rule(1, ("g0", 1), BOT, ("g1", 1), CALL, "a"),
        Rule(1, ("g1", 1), "a", ("g0", 2), INTERNAL, "a"),
        Rule(2, ("g0", 2), BOT, ("g0", 2), INTERNAL, BOT),
    ), ("g0", 1))


def audit_corpus():
    named = [(sys1(), "g0", 1, parse_formula("G F g0@1"), 3, {}),
             (sys2(), "g0", 1, parse_formula("G F g0@1"), 3, {}),
             (handoff(), "g0", 1, parse_formula("F G g0@2"), 3, {})]
    rng = random.Random(33)
    for _ in range(60):
        inst = random_instance(rng)
        named.append((inst.system, inst.g0, inst.i0, inst.formula, inst.k, inst.automata))
    return named


def _violations(audit, P, k):
    per_op = [e for e in audit if e["after"] - e["before"] > P]
    path = [e for e in audit if e["path_growth"] > 3 * (k + 1) * P]
    return per_op, path


def test_3_additive_growth_audit(report):
    ops = 0
    bad_op, bad_path = [], []
    for system, g0, i0, f, k, autos in audit_corpus():
        runs = [bmc(system, g0, i0, f, k, autos)]
        runs += [brep_single(system, (g0, i0), t, k) for t in sorted(system.states)]
        for v in runs:
            P = v.search.P
            ops += len(v.audit)
            a, b = _violations(v.audit, P, k)
            bad_op += [(e, P) for e in a]
            bad_path += [(e, P) for e in b]
    ok = not bad_op and not bad_path
    worst = max((e["after"] - e["before"]) / P for e, P in bad_op) if bad_op else 0
    report(3, ok, f"{ops} alpha-loop operations, {len(bad_op)} exceed |P| per operation "
                  f"(worst growth {worst:.2f}*|P|), {len(bad_path)} exceed 3(k+1)*|P| along a path")
    assert not bad_op, bad_op[:3]
    assert not bad_path, bad_path[:3]


# ------------------------------------------------------------------------ 4

def _same_run(a, b):
    """Ultimately periodic runs compared over a horizon that covers both cycles."""
    horizon = max(a.loop, b.loop) + math.lcm(a.period, b.period) + 1
    return unrolled(a, horizon) == unrolled(b, horizon)


def test_4_augmentation_soundness_and_completeness(report):
    rng = random.Random(44)
    t0 = time.perf_counter()
    forward = converse = violations = 0
    while forward < 100:
        m = random_enhanced(rng, n=2, n_states=2, n_letters=2, density=1.0)
        autos = {"A": random_nfa(rng, "A", [a for a in m.alphabet if a != BOT])}
        for lasso in list(base_lassos(m, ("g0", 1), 3, 6))[:3]:
            f = L.rewrite_derived(random_formula(rng, rng.randint(1, 7), m.base_states, 2, autos), 2)
            if not evaluate(lasso, 0, f, autos, enhanced=True):
                f = L.neg(f)
            p = Product(m, f, autos)
            aug = augment(p, lasso)
            run = aug.run
            forward += 1
            if run.configs[0].state not in p.initial_states("g0", 1):
                violations += 1
            for t in range(aug.length):
                if not is_product_step(p, run.configs[t], run.configs[t + 1], run.rules[t]):
                    violations += 1
            for _, pred in p.acceptance_family():
                if not any(pred(run.configs[t].state) for t in range(aug.loop, aug.length)):
                    violations += 1
    while converse < 100:
        m = random_enhanced(rng, n=2, n_states=2, n_letters=2, density=1.0)
        autos = {"A": random_nfa(rng, "A", [a for a in m.alphabet if a != BOT])}
        f = L.rewrite_derived(random_formula(rng, rng.randint(1, 6), m.base_states, 2, autos), 2)
        res = oracle_bmc(m, "g0", 1, f, rng.randint(1, 3), autos, H=6)
        if res.lasso is None:
            continue
        converse += 1
        again = augment(Product(m, f, autos), project(res.lasso))
        if not _same_run(again, res.lasso):
            violations += 1
    dt = time.perf_counter() - t0
    ok = violations == 0 and dt < 60
    report(4, ok, f"{forward} augmented lassos, {converse} re-augmented product lassos, "
                  f"{violations} violations, {dt:.2f}s (limit 60s)")
    assert violations == 0
    assert dt < 60


# ------------------------------------------------------------------------ 5

def test_5_end_to_end_agreement(report):
    rng = random.Random(55)
    t0 = time.perf_counter()
    total, conclusive, agree, yes = 60, 0, 0, 0
    inconclusive = []
    for i in range(total):
        inst = random_instance(rng, label=f"inst{i}")
        agreement, v, res = cross_check(inst.system, inst.g0, inst.i0, inst.formula, inst.k,
                                        automata=inst.automata)
        if agreement == "inconclusive":
            inconclusive.append(inst.label)
            continue
        conclusive += 1
        agree += agreement == "agree"
        yes += v.answer == "yes"
    dt = time.perf_counter() - t0
    rate = conclusive / total
    ok = agree == conclusive and rate >= 0.8 and dt < 120
    report(5, ok, f"{total} instances, {conclusive} conclusive ({rate:.0%}, {yes} yes), "
                  f"{agree}/{conclusive} agree, inconclusive: {inconclusive or 'none'}, "
                  f"{dt:.2f}s (limit 120s)")
    assert agree == conclusive
    assert rate >= 0.8
    assert dt < 120


# ------------------------------------------------------------------------ 6

def test_6_named_micro_cases(report):
    cases = [(sys1(), "g0@1", 1, "yes"), (sys1(), "Xa[1] g1@1", 1, "yes")]
    for text in ("g0@1", "true", "G F g0@2", "F call", "g0@1 Ua[1] g0@1"):
        for k in (1, 2, 3):
            cases.append((sys2(), text, k, "no"))
    wrong = []
    for m, text, k, want in cases:
        f = parse_formula(text)
        derived = oracle_bmc(m, "g0", 1, f, k).answer
        got = bmc(m, "g0", 1, f, k).answer
        if derived != want or got != want:
            wrong.append((text, k, derived, got))
    report(6, not wrong, f"{len(cases)} micro-cases, wrong: {wrong or 'none'}")
    assert not wrong


# ------------------------------------------------------------------------ 7

SCALING_C = 1.0


def scaling_family():
    """Two stacks, three states, two letters, every top has a rule."""
    return random_enhanced(random.Random(7), n=2, n_states=3, n_letters=2, density=1.0,
                           stay=0.5)


def test_7_scaling_smoke(report):
    m = scaling_family()
    size = len(m.states) + len(m.rules)
    f = parse_formula("G F g2@2")
    times = {}
    for k in (1, 2, 3):
        best = math.inf
        for _ in range(3):
            t0 = time.perf_counter()
            bmc(m, "g0", 1, f, k)
            best = min(best, time.perf_counter() - t0)
        times[k] = best
    ratios = {k: times[k + 1] / times[k] for k in (1, 2)}
    bound = SCALING_C * size
    ok = all(r <= bound for r in ratios.values())
    detail = ", ".join(f"t(k={k})={times[k]:.4f}s" for k in times)
    detail += "; ratios " + ", ".join(f"{r:.2f}" for r in ratios.values())
    detail += f"; bound c*|M| = {SCALING_C}*{size}"
    report(7, ok, detail + ("" if ok else " (soft failure, informational only)"))
    if not ok:
        pytest.xfail("scaling ratio above c*|M|: " + detail)
