"""Named small systems and random instance generators.

Random systems use a layered alphabet by default: a call may only push a
letter ranked above the current top and an internal step may only raise the
rank, so every stack holds strictly increasing ranks and heights stay below
|alphabet| + 2.  That keeps explicit exploration exact for most instances.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import logic as L
from .automata import Nfa
from .mpds import BOT, CALL, INTERNAL, RETURN, EnhancedMpds, Mpds, Rule, enhance, make_enhanced

LETTERS = ("a", "b", "c")


def sys1() -> EnhancedMpds:
    """One stack: push a, pop it, then loop back or idle in g1."""
    m = Mpds(("g0", "g1"), 1, ("a",), (
        Rule(1, "g0", BOT, "g0", CALL, "a"),
        Rule(1, "g0", "a", "g1", RETURN, "a"),
        Rule(1, "g1", BOT, "g0", INTERNAL, BOT),
        Rule(1, "g1", BOT, "g1", INTERNAL, BOT),
    ), ("g0", 1))
    return enhance(m)


def sys2() -> EnhancedMpds:
    """Two stacks, every step pushes a and hands control to the other stack."""
    return make_enhanced(("g0",), 2, ("a",), (
        Rule(1, ("g0", 1), BOT, ("g0", 2), CALL, "a"),
        Rule(1, ("g0", 1), "a", ("g0", 2), CALL, "a"),
        Rule(2, ("g0", 2), BOT, ("g0", 1), CALL, "a"),
        Rule(2, ("g0", 2), "a", ("g0", 1), CALL, "a"),
    ), ("g0", 1))


def empty_system(n: int = 1) -> EnhancedMpds:
    return make_enhanced(("g0",), n, (), (), ("g0", 1))


@dataclass
class Instance:
    system: EnhancedMpds
    g0: str
    i0: int
    formula: L.Formula
    k: int
    automata: dict = field(default_factory=dict)
    label: str = ""


def _rank(x: str, letters) -> int:
    return 0 if x == BOT else letters.index(x) + 1


def random_enhanced(rng: random.Random, n: int = 2, n_states: int = 3, n_letters: int = 2,
                    density: float = 0.6, stay: float = 0.6, layered: bool = True) -> EnhancedMpds:
    """Random enhanced system; each (state, stack, top) gets 0-2 rules."""
    base = tuple(f"g{i}" for i in range(n_states))
    letters = LETTERS[:n_letters]
    rules = []
    for g in base:
        for s in range(1, n + 1):
            for x in (BOT,) + letters:
                count = 0
                while count < 2 and rng.random() < (density if count == 0 else density / 3):
                    count += 1
                    r = _random_rule(rng, g, s, x, base, n, letters, stay, layered)
                    if r is not None:
                        rules.append(r)
    return make_enhanced(base, n, letters, rules, (base[0], 1))


def _random_rule(rng, g, s, x, base, n, letters, stay, layered):
    rank = _rank(x, letters)
    higher = [b for b in letters if _rank(b, letters) > rank] if layered else list(letters)
    kinds = []
    if higher:
        kinds.append(CALL)
    kinds.append(INTERNAL)
    if x != BOT:
        kinds.append(RETURN)
    kind = rng.choice(kinds)
    if kind == CALL:
        b = rng.choice(higher)
    elif kind == INTERNAL:
        if x == BOT:
            b = BOT
        else:
            pool = [y for y in letters if _rank(y, letters) >= rank] if layered else list(letters)
            b = rng.choice(pool)
    else:
        b = x
    s2 = s if rng.random() < stay or n == 1 else rng.choice([j for j in range(1, n + 1) if j != s])
    return Rule(s, (g, s), x, (rng.choice(base), s2), kind, b)


def random_nfa(rng: random.Random, name: str, letters) -> Nfa:
    """Complete two-state deterministic automaton over bot and the letters."""
    states = ("q0", "q1")
    trans = tuple((q, a, rng.choice(states)) for q in states for a in (BOT,) + tuple(letters))
    acc = frozenset(rng.sample(states, rng.choice([1, 1, 2])))
    return Nfa(name, states, frozenset({"q0"}), acc, trans)


def random_formula(rng: random.Random, size: int, base_states, n: int,
                   automata=(), ops: str = "full") -> L.Formula:
    """Random formula with ``size`` syntax nodes.

    ``ops`` = "full" draws from all primitive operators, "future" leaves out
    the caller operators.
    """
    def leaf():
        kinds = ["state", "state", "action", "stack"]
        if automata:
            kinds.append("in")
        k = rng.choice(kinds)
        s = rng.randint(1, n)
        if k == "state":
            return L.state(rng.choice(base_states), s)
        if k == "action":
            return L.action(rng.choice([CALL, INTERNAL, RETURN]))
        if k == "stack":
            return L.stack(s)
        return L.in_(s, rng.choice(list(automata)))

    unary = ["not", "X", "Xa"]
    binary = ["or", "and", "U", "Ua"]
    if ops == "full":
        unary.append("Xc")
        binary.append("Uc")

    def gen(m: int) -> L.Formula:
        if m <= 1:
            return leaf()
        if m == 2 or rng.random() < 0.4:
            op = rng.choice(unary)
            sub = gen(m - 1)
            s = rng.randint(1, n)
            return {"not": lambda: L.neg(sub), "X": lambda: L.nxt(sub),
                    "Xa": lambda: L.anext(s, sub), "Xc": lambda: L.cnext(s, sub)}[op]()
        op = rng.choice(binary)
        left = rng.randint(1, m - 2)
        a, b = gen(left), gen(m - 1 - left)
        s = rng.randint(1, n)
        return {"or": lambda: L.disj(a, b), "and": lambda: L.conj(a, b),
                "U": lambda: L.until(a, b), "Ua": lambda: L.auntil(s, a, b),
                "Uc": lambda: L.cuntil(s, a, b)}[op]()

    return gen(size)


def random_instance(rng: random.Random, layered: bool = True, label: str = "") -> Instance:
    """N = 2, at most 3 states and 2 letters, k in 1..3, formula size at most 8.

    Every (state, stack, top) gets at least one rule, so most systems have
    infinite runs and the verdicts are not all "no".
    """
    system = random_enhanced(rng, n=2, n_states=rng.randint(1, 3), n_letters=rng.randint(1, 2),
                             density=1.0, layered=layered)
    automata = {}
    if rng.random() < 0.3:
        automata["A"] = random_nfa(rng, "A", [a for a in system.alphabet if a != BOT])
    f = random_formula(rng, rng.randint(1, 8), system.base_states, 2, automata, ops="future")
    return Instance(system, system.base_states[0], 1, f, rng.randint(1, 3), automata, label)


def random_pds(rng: random.Random, n_states: int = 4, n_letters: int = 3, n_rules: int = 8,
               acyclic_push: bool = False) -> list[tuple]:
    """Random single-stack rules (p, a, p2, action, b) over bot and the letters.

    With ``acyclic_push`` calls push strictly higher-ranked letters and
    internal steps never lower the rank, which bounds heights by
    |letters| + 1.
    """
    states = [f"p{i}" for i in range(n_states)]
    letters = list(LETTERS[:n_letters])
    rules = []
    for _ in range(rng.randint(1, n_rules)):
        p, p2 = rng.choice(states), rng.choice(states)
        x = rng.choice([BOT] + letters)
        rank = _rank(x, letters)
        kinds = [INTERNAL]
        pushable = [b for b in letters if _rank(b, letters) > rank] if acyclic_push else letters
        if pushable:
            kinds.append(CALL)
        if x != BOT:
            kinds.append(RETURN)
        kind = rng.choice(kinds)
        if kind == CALL:
            b = rng.choice(pushable)
        elif kind == INTERNAL:
            if x == BOT:
                b = BOT
            else:
                pool = [y for y in letters if _rank(y, letters) >= rank] if acyclic_push else letters
                b = rng.choice(pool)
        else:
            b = x
        rules.append((p, x, p2, kind, b))
    return rules
