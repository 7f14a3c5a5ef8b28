"""Multi-pushdown systems: data model, one-step semantics and run predicates.

Stacks are numbered from 1.  A stack content is a tuple of letters with the
bottom letter ``BOT`` first and the top letter last.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

BOT = "bot"
CALL, INTERNAL, RETURN = "call", "internal", "return"
ACTIONS = (CALL, INTERNAL, RETURN)

State = Hashable


class MpdsError(ValueError):
    """Raised for malformed systems or illegal steps."""


@dataclass(frozen=True)
class Rule:
    """One transition of Delta_stack.

    ``letter`` is the argument b of ``action(b)``: the pushed letter for a
    call, the replacement for an internal step and the popped letter for a
    return.
    """

    stack: int
    source: State
    top: str
    target: State
    action: str
    letter: str
    rid: int = -1

    def __str__(self) -> str:
        return (f"rule {self.stack}: {self.source} {self.top} -> "
                f"{self.target} {self.action}({self.letter})")


@dataclass(frozen=True)
class Config:
    state: State
    stacks: tuple[tuple[str, ...], ...]

    def top(self, s: int) -> str:
        return self.stacks[s - 1][-1]

    def height(self, s: int) -> int:
        return len(self.stacks[s - 1])


def initial_config(state: State, stack_count: int) -> Config:
    return Config(state, tuple((BOT,) for _ in range(stack_count)))


def _check_rule(rule: Rule, states: frozenset, alphabet: frozenset, n: int) -> None:
    if not 1 <= rule.stack <= n:
        raise MpdsError(f"stack index out of range in {rule}")
    if rule.source not in states or rule.target not in states:
        raise MpdsError(f"unknown state in {rule}")
    if rule.top not in alphabet or rule.letter not in alphabet:
        raise MpdsError(f"unknown letter in {rule}")
    if rule.action not in ACTIONS:
        raise MpdsError(f"unknown action {rule.action!r}")
    if rule.action == CALL and rule.letter == BOT:
        raise MpdsError(f"bot cannot be pushed: {rule}")
    if rule.action == RETURN:
        if rule.top == BOT:
            raise MpdsError(f"bot cannot be popped: {rule}")
        if rule.letter != rule.top:
            raise MpdsError(f"return must name the popped letter: {rule}")
    if rule.action == INTERNAL and (rule.top == BOT) != (rule.letter == BOT):
        raise MpdsError(f"bot cannot be replaced or written: {rule}")


@dataclass(frozen=True)
class Mpds:
    """Plain multi-pushdown system: any rule of any stack may fire."""

    states: tuple
    stack_count: int
    alphabet: tuple[str, ...]
    rules: tuple[Rule, ...]
    initial: tuple | None = None
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        if self.stack_count < 1:
            raise MpdsError("at least one stack is required")
        if BOT not in self.alphabet:
            object.__setattr__(self, "alphabet", (BOT,) + tuple(self.alphabet))
        if len(set(self.states)) != len(self.states):
            raise MpdsError("duplicate state")
        states, letters = frozenset(self.states), frozenset(self.alphabet)
        if self.initial is not None:
            g, i = self.initial
            start = self.initial if self.enhanced else g
            if start not in states or not 1 <= i <= self.stack_count:
                raise MpdsError(f"bad initial state {self.initial}")
        numbered = []
        for i, r in enumerate(self.rules):
            _check_rule(r, states, letters, self.stack_count)
            numbered.append(r if r.rid == i else Rule(r.stack, r.source, r.top,
                                                      r.target, r.action, r.letter, i))
        object.__setattr__(self, "rules", tuple(numbered))
        index: dict = {}
        for r in self.rules:
            index.setdefault((r.source, r.stack, r.top), []).append(r)
        object.__setattr__(self, "_index", index)

    enhanced = False

    def rules_for(self, state: State, stack: int, top: str) -> list[Rule]:
        return self._index.get((state, stack, top), [])

    def active_stack(self, state: State) -> int | None:
        return None


@dataclass(frozen=True)
class EnhancedMpds(Mpds):
    """States are pairs (g, s); rules of Delta_s leave states whose stack is s."""

    base_states: tuple = ()

    def __post_init__(self) -> None:
        super().__post_init__()
        for r in self.rules:
            if r.source[1] != r.stack:
                raise MpdsError(f"source stack differs from rule stack: {r}")
            if not 1 <= r.target[1] <= self.stack_count:
                raise MpdsError(f"target stack out of range: {r}")

    enhanced = True

    def active_stack(self, state: State) -> int:
        return state[1]


def make_enhanced(base_states: Iterable, stack_count: int, alphabet: Iterable[str],
                  rules: Iterable[Rule], initial: tuple | None = None) -> EnhancedMpds:
    base = tuple(base_states)
    states = tuple((g, s) for g in base for s in range(1, stack_count + 1))
    return EnhancedMpds(states, stack_count, tuple(alphabet), tuple(rules), initial,
                        base_states=base)


def enhance(mpds: Mpds, initial_active: int | None = None) -> EnhancedMpds:
    """Pair every state with the stack the next step acts on.

    A rule of Delta_s from g becomes one rule from (g, s) per choice of the
    next active stack.  ``initial_active`` only selects which enhanced state
    corresponds to the original initial state and is checked for range.
    """
    if mpds.enhanced:
        return mpds
    n = mpds.stack_count
    initial = None
    if mpds.initial is not None:
        initial = (mpds.initial[0], initial_active or mpds.initial[1])
    elif initial_active is not None and not 1 <= initial_active <= n:
        raise MpdsError("initial active stack out of range")
    rules = []
    for r in mpds.rules:
        for s2 in range(1, n + 1):
            rules.append(Rule(r.stack, (r.source, r.stack), r.top, (r.target, s2),
                              r.action, r.letter))
    return make_enhanced(mpds.states, n, mpds.alphabet, rules, initial)


def step(mpds: Mpds, config: Config, rule: Rule) -> Config:
    if rule.source != config.state:
        raise MpdsError(f"rule source {rule.source} does not match state {config.state}")
    s = rule.stack
    w = config.stacks[s - 1]
    if w[-1] != rule.top:
        raise MpdsError(f"top letter {w[-1]} does not match rule letter {rule.top}")
    if rule.action == CALL:
        if rule.letter == BOT:
            raise MpdsError("bot cannot be pushed")
        w2 = w + (rule.letter,)
    elif rule.action == INTERNAL:
        if (w[-1] == BOT) != (rule.letter == BOT):
            raise MpdsError("bot cannot be replaced")
        w2 = w[:-1] + (rule.letter,)
    else:
        if w[-1] == BOT:
            raise MpdsError("bot cannot be popped")
        if rule.letter != w[-1]:
            raise MpdsError("return letter differs from the popped letter")
        w2 = w[:-1]
    stacks = config.stacks[:s - 1] + (w2,) + config.stacks[s:]
    return Config(rule.target, stacks)


def successors(mpds: Mpds, config: Config) -> list[tuple[Rule, Config]]:
    """All one-step successors, ordered by rule declaration."""
    out = []
    if mpds.enhanced:
        stacks = [mpds.active_stack(config.state)]
    else:
        stacks = range(1, mpds.stack_count + 1)
    for s in stacks:
        for r in mpds.rules_for(config.state, s, config.top(s)):
            out.append((r, step(mpds, config, r)))
    out.sort(key=lambda p: p[0].rid)
    return out


@dataclass(frozen=True)
class RunPrefix:
    configs: tuple[Config, ...]
    active: tuple[int, ...]
    actions: tuple[str, ...]
    rules: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not (len(self.active) == len(self.actions) == len(self.configs) - 1):
            raise MpdsError("a run prefix needs one active stack and action per step")


@dataclass(frozen=True)
class LassoRun:
    """The infinite run prefix.configs[:loop] (prefix.configs[loop:-1])^omega.

    The last configuration repeats the one at index ``loop``.
    """

    run: RunPrefix
    loop: int

    def __post_init__(self) -> None:
        if not 0 <= self.loop < len(self.run.active):
            raise MpdsError("cycle start out of range")
        if self.run.configs[self.loop] != self.run.configs[-1]:
            raise MpdsError("cycle does not close on the same configuration")

    @property
    def length(self) -> int:
        return len(self.run.active)

    @property
    def period(self) -> int:
        return self.length - self.loop

    def index(self, t: int) -> int:
        """Map a position of the infinite run to a step index of the lasso."""
        if t < self.length:
            return t
        return self.loop + (t - self.loop) % self.period


def replay(mpds: Mpds, start: Config, rule_ids: Sequence[int]) -> RunPrefix:
    configs, active, actions = [start], [], []
    c = start
    for rid in rule_ids:
        r = mpds.rules[rid]
        c = step(mpds, c, r)
        configs.append(c)
        active.append(r.stack)
        actions.append(r.action)
    return RunPrefix(tuple(configs), tuple(active), tuple(actions), tuple(rule_ids))


def _switches(seq: Sequence[int]) -> int:
    return sum(1 for a, b in zip(seq, seq[1:]) if a != b)


def is_k_bounded(active: Sequence[int], k: int, loop: int | None = None) -> bool:
    """At most k-1 context switches.

    With ``loop`` the sequence is a lasso whose cycle starts at that index; the
    run is then k-bounded iff the cycle never switches.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    active = list(active)
    if loop is not None:
        cycle = active[loop:]
        if _switches(cycle + cycle[:1]):
            return False
    return _switches(active) <= k - 1


def _blocks(seq: Sequence[int]) -> int:
    return (1 if seq else 0) + _switches(seq)


def is_k_phase_bounded(active: Sequence[int], actions: Sequence[str], k: int,
                       loop: int | None = None) -> bool:
    """Returns split into at most k contiguous blocks, each on one stack."""
    if k < 1:
        raise ValueError("k must be at least 1")
    rets = [s for s, a in zip(active, actions) if a == RETURN]
    if loop is not None:
        cyc = {s for s, a in zip(active[loop:], actions[loop:]) if a == RETURN}
        if len(cyc) > 1:
            return False
    return _blocks(rets) <= k


def is_order_bounded(run: RunPrefix, ordering: Sequence[int]) -> bool:
    """Every return on stack s happens while all stacks below s are empty."""
    rank = {s: i for i, s in enumerate(ordering)}
    for t, (s, a) in enumerate(zip(run.active, run.actions)):
        if a != RETURN:
            continue
        c = run.configs[t]
        for j in rank:
            if rank[j] < rank[s] and c.stacks[j - 1] != (BOT,):
                return False
    return True
