"""Single-stack pushdown analysis.

Configurations are (control state, word) with the word read top-first, as
P-automata expect.  Rule shapes follow the three actions:

    internal  (p, a) -> (p', b)       top a replaced by b
    call      (p, a) -> (p', b a)     b pushed on top of a
    return    (p, a) -> (p', eps)     a popped

Rule sources are queried lazily through ``rules(p, a)`` so that huge
(product) systems are only explored where saturation actually goes.
"""
from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable

from .mpds import CALL, INTERNAL, RETURN

EPS = None


@dataclass(frozen=True)
class Aux:
    """A non-control automaton state."""

    tag: Hashable

    def __repr__(self) -> str:
        return f"Aux{self.tag!r}"


# ------------------------------------------------------------- rule sources

class ExplicitPds:
    """Finite rule table; supports both forward and backward saturation."""

    def __init__(self, rules: Iterable[tuple]):
        self.rule_list = []
        self._fwd: dict = defaultdict(list)
        self._by_target: dict = defaultdict(list)
        seen = set()
        for p, a, p2, kind, b in rules:
            if kind not in (CALL, INTERNAL, RETURN):
                raise ValueError(f"unknown action {kind}")
            r = (p, a, p2, kind, b if kind != RETURN else None)
            if r in seen:
                continue
            seen.add(r)
            self.rule_list.append(r)
            self._fwd[(p, a)].append((p2, kind, r[4]))
            self._by_target[(p2, kind, r[4])].append((p, a))

    def rules(self, p, a) -> list[tuple]:
        return self._fwd.get((p, a), [])

    def sources_of(self, p2, kind, b) -> list[tuple]:
        return self._by_target.get((p2, kind, b), [])

    @property
    def states(self) -> set:
        out = set()
        for p, _, p2, _, _ in self.rule_list:
            out.add(p)
            out.add(p2)
        return out


class LazyPds:
    """Stack ``stack`` of a lazy multi-stack system seen as a pushdown system.

    Only states whose active stack is ``stack`` have rules, so a run stops at
    the first context switch.
    """

    def __init__(self, system, stack: int):
        self.system = system
        self.stack = stack
        self._cache: dict = {}

    def rules(self, p, a) -> list[tuple]:
        key = (p, a)
        got = self._cache.get(key)
        if got is None:
            got = []
            if self.system.active_stack(p) == self.stack:
                seen = set()
                for _, p2, (kind, b) in self.system.successors(p, a):
                    r = (p2, kind, b)
                    if r not in seen:
                        seen.add(r)
                        got.append(r)
            self._cache[key] = got
        return got


# --------------------------------------------------------------- automata

class PAutomaton:
    """Finite automaton whose control states double as initial states.

    ``eps`` holds epsilon moves, which post* only creates from control states.
    Any state that is not an :class:`Aux` is a control state.
    """

    def __init__(self, transitions: Iterable[tuple] = (), finals: Iterable = (),
                 eps: Iterable[tuple] = (), extra_states: Iterable = ()):
        self.trans: set = set()
        self.out: dict = defaultdict(set)
        for t in transitions:
            self.add(*t)
        self.finals = set(finals)
        self.eps: dict = defaultdict(set)
        for p, q in eps:
            self.eps[p].add(q)
        self.extra = set(extra_states)
        self._live = None
        self._states = None

    def add(self, q, a, q2) -> bool:
        t = (q, a, q2)
        if t in self.trans:
            return False
        self.trans.add(t)
        self.out[q].add((a, q2))
        self._live = self._states = None
        return True

    def freeze(self) -> "PAutomaton":
        """Cache derived sets; the automaton must not change afterwards."""
        self._states = self._compute_states()
        self._live = self._compute_live()
        return self

    def states(self) -> set:
        if self._states is not None:
            return self._states
        return self._compute_states()

    def _compute_states(self) -> set:
        out = set(self.finals) | self.extra
        for q, _, q2 in self.trans:
            out.add(q)
            out.add(q2)
        for p, qs in self.eps.items():
            if qs:
                out.add(p)
                out |= qs
        return out

    def state_count(self) -> int:
        return len(self.states())

    def _start(self, p) -> set:
        return {p} | self.eps.get(p, set())

    def accepts(self, p, word_top_first: Iterable) -> bool:
        cur = self._start(p)
        for a in word_top_first:
            nxt = set()
            for q in cur:
                for b, q2 in self.out.get(q, ()):
                    if b == a:
                        nxt.add(q2)
            cur = nxt
            if not cur:
                return False
        return not cur.isdisjoint(self.finals)

    def accepts_config(self, p, stack_bottom_first: Iterable) -> bool:
        return self.accepts(p, list(stack_bottom_first)[::-1])

    def control_states(self) -> set:
        return {q for q in self.states() if not isinstance(q, Aux)}

    def coaccessible(self) -> set:
        if self._live is not None:
            return self._live
        return self._compute_live()

    def _compute_live(self) -> set:
        back: dict = defaultdict(set)
        for q, _, q2 in self.trans:
            back[q2].add(q)
        for p, qs in self.eps.items():
            for q in qs:
                back[q].add(p)
        seen = set(self.finals)
        todo = list(seen)
        while todo:
            q = todo.pop()
            for r in back.get(q, ()):
                if r not in seen:
                    seen.add(r)
                    todo.append(r)
        return seen

    def heads(self) -> set:
        """Pairs (p, a) such that some accepted configuration of p has top a."""
        live = self.coaccessible()
        out = set()
        for p in self.control_states():
            for q in self._start(p):
                for a, q2 in self.out.get(q, ()):
                    if q2 in live:
                        out.add((p, a))
        return out

    def is_empty_for(self, p) -> bool:
        live = self.coaccessible()
        return not any(q in live for q in self._start(p))

    def dump(self) -> str:
        """Line-based text form: one transition per line, then finals."""
        lines = [f"{q!r} {a!r} {q2!r}" for q, a, q2 in sorted(self.trans, key=repr)]
        lines += [f"{p!r} eps {q!r}" for p in sorted(self.eps, key=repr)
                  for q in sorted(self.eps[p], key=repr)]
        lines.append("accepting " + " ".join(sorted(repr(q) for q in self.finals)))
        return "\n".join(lines)


class Fsa:
    """Word automaton over stack letters with a single initial state; words top-first."""

    def __init__(self, initial, transitions: Iterable[tuple], finals: Iterable):
        self.initial = initial
        self.trans = set(transitions)
        self.finals = set(finals)
        self.out: dict = defaultdict(set)
        for q, a, q2 in self.trans:
            self.out[q].add((a, q2))

    def states(self) -> set:
        out = {self.initial} | self.finals
        for q, _, q2 in self.trans:
            out.add(q)
            out.add(q2)
        return out

    def state_count(self) -> int:
        return len(self.states())

    def accepts(self, word_top_first: Iterable) -> bool:
        cur = {self.initial}
        for a in word_top_first:
            cur = {q2 for q in cur for b, q2 in self.out.get(q, ()) if b == a}
            if not cur:
                return False
        return not cur.isdisjoint(self.finals)

    def is_empty(self) -> bool:
        seen, todo = {self.initial}, [self.initial]
        while todo:
            q = todo.pop()
            if q in self.finals:
                return False
            for _, q2 in self.out.get(q, ()):
                if q2 not in seen:
                    seen.add(q2)
                    todo.append(q2)
        return True


def single_word_fsa(word_top_first: Iterable, tag: Hashable = "w") -> Fsa:
    word = list(word_top_first)
    states = [Aux((tag, i)) for i in range(len(word) + 1)]
    trans = [(states[i], a, states[i + 1]) for i, a in enumerate(word)]
    return Fsa(states[0], trans, [states[-1]])


def config_automaton(configs: Iterable[tuple]) -> PAutomaton:
    """P-automaton accepting exactly the given (state, bottom-first stack) pairs."""
    A = PAutomaton()
    final = Aux(("final",))
    A.finals.add(final)
    for n, (p, stack) in enumerate(configs):
        word = list(stack)[::-1]
        if not word:
            raise ValueError("configurations have at least the bottom letter")
        prev = p
        for i, a in enumerate(word):
            nxt = final if i == len(word) - 1 else Aux(("cfg", n, i))
            A.add(prev, a, nxt)
            prev = nxt
    return A


def fsa_of(A: PAutomaton, p) -> Fsa:
    """Words w with (p, w) accepted by A, with p replaced by a fresh initial state."""
    q0 = Aux(("init", p))
    trans = set()
    finals = set()
    live = A.coaccessible()
    for q in A._start(p):
        if q in A.finals:
            finals.add(q0)
        for a, q2 in A.out.get(q, ()):
            if q2 in live:
                trans.add((q0, a, q2))
    seen = {q2 for _, _, q2 in trans}
    todo = list(seen)
    while todo:
        q = todo.pop()
        if q in A.finals:
            finals.add(q)
        for a, q2 in A.out.get(q, ()):
            if q2 in live:
                trans.add((q, a, q2))
                if q2 not in seen:
                    seen.add(q2)
                    todo.append(q2)
    return Fsa(q0, trans, finals)


def pa_of(B: Fsa, heads) -> PAutomaton:
    """P-automaton accepting (p, w) iff p is one of ``heads`` and w is in L(B).

    ``heads`` may be a single control state or a list of them.  The initial
    state of B is kept as an inner state only if B can come back to it.
    """
    if isinstance(heads, list):
        hs = heads
    else:
        hs = [heads]
    q0 = B.initial
    reentrant = any(q2 == q0 for _, _, q2 in B.trans)
    A = PAutomaton()
    for q, a, q2 in B.trans:
        if q != q0 or reentrant:
            A.add(q, a, q2)
        if q == q0:
            for h in hs:
                A.add(h, a, q2)
    A.finals = set(B.finals) if reentrant else set(B.finals) - {q0}
    if q0 in B.finals:
        A.finals |= set(hs)
    if not reentrant:
        A.extra = set()
    return A


# -------------------------------------------------------------- saturation

class SaturationStats:
    def __init__(self) -> None:
        self.ops: list[tuple[str, int, int]] = []

    def record(self, op: str, before: int, after: int) -> None:
        self.ops.append((op, before, after))


def post_star(pds, A: PAutomaton, stats: SaturationStats | None = None) -> PAutomaton:
    """Forward saturation: configurations reachable from L(A).

    Call rules route through one intermediate state per (target, pushed
    letter) pair, shared across the whole saturation.
    """
    before = A.state_count()
    work: deque = deque()
    rel_out: dict = defaultdict(set)       # inner state -> {(a, q2)}
    result = PAutomaton(finals=A.finals)
    result.extra = set(A.extra)
    for q, a, q2 in A.trans:
        if isinstance(q, Aux):
            rel_out[q].add((a, q2))
            result.add(q, a, q2)
        else:
            work.append((q, a, q2))
    for p, qs in A.eps.items():
        for q in qs:
            work.append((p, EPS, q))
    eps_into: dict = defaultdict(set)      # inner state -> control states with eps into it
    seen_eps: set = set()
    while work:
        p, a, q = work.popleft()
        if a is EPS:
            if (p, q) in seen_eps:
                continue
            seen_eps.add((p, q))
            result.eps[p].add(q)
            eps_into[q].add(p)
            for b, q2 in list(rel_out.get(q, ())):
                work.append((p, b, q2))
            continue
        if not result.add(p, a, q):
            continue
        for p2, kind, b in pds.rules(p, a):
            if kind == INTERNAL:
                work.append((p2, b, q))
            elif kind == RETURN:
                work.append((p2, EPS, q))
            else:
                mid = Aux(("mid", p2, b))
                work.append((p2, b, mid))
                if (a, q) not in rel_out[mid]:
                    rel_out[mid].add((a, q))
                    result.add(mid, a, q)
                    for p3 in eps_into.get(mid, ()):
                        work.append((p3, a, q))
    result.freeze()
    if stats is not None:
        stats.record("post*", before, result.state_count())
    return result


def pre_star(pds: ExplicitPds, A: PAutomaton, stats: SaturationStats | None = None) -> PAutomaton:
    """Backward saturation: configurations that can reach L(A)."""
    if any(A.eps.values()):
        raise ValueError("pre* expects an automaton without epsilon moves")
    before = A.state_count()
    result = PAutomaton(finals=A.finals)
    result.extra = set(A.extra)
    work: deque = deque(A.trans)
    for p, a, p2, kind, _ in pds.rule_list:
        if kind == RETURN:
            work.append((p, a, p2))
    aux: dict = defaultdict(set)   # (q, a) -> {(p1, a1)} derived internal-like rules
    while work:
        q, a, q2 = work.popleft()
        if not result.add(q, a, q2):
            continue
        for p1, a1 in pds.sources_of(q, INTERNAL, a):
            work.append((p1, a1, q2))
        for p1, a1 in list(aux.get((q, a), ())):
            work.append((p1, a1, q2))
        for p1, a1 in pds.sources_of(q, CALL, a):
            # (p1, a1) -> (q, a a1): after reading a we are in q2 with a1 next
            if (p1, a1) not in aux[(q2, a1)]:
                aux[(q2, a1)].add((p1, a1))
                for b, q3 in list(result.out.get(q2, ())):
                    if b == a1:
                        work.append((p1, a1, q3))
    if stats is not None:
        stats.record("pre*", before, result.state_count())
    return result


# --------------------------------------------------------- repeated heads

def _tarjan(nodes: Iterable, succ: Callable) -> list[list]:
    index: dict = {}
    low: dict = {}
    on: set = set()
    stack: list = []
    out: list = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        it = [(root, iter(succ(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on.add(root)
        while it:
            v, children = it[-1]
            advanced = False
            for w in children:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on.add(w)
                    it.append((w, iter(succ(w))))
                    advanced = True
                    break
                if w in on:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            it.pop()
            if it:
                u = it[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def strongly_connected_components(nodes: Iterable, succ: Callable) -> list[list]:
    return _tarjan(nodes, succ)


def _summaries(pds, start: Iterable, is_target: Callable) -> tuple[dict, set]:
    """Summ[(p, a)] = {p2: flag}: (p, a) can pop a and reach p2, visiting a
    target state on the way iff flag (True wins)."""
    summ: dict = {}
    deps: dict = defaultdict(set)
    work: deque = deque()

    def need(h, by=None):
        if by is not None:
            deps[h].add(by)
        if h not in summ:
            summ[h] = {}
            work.append(h)

    for h in start:
        need(h)
    while work:
        h = work.popleft()
        p, a = h
        fp = bool(is_target(p))
        new = dict(summ[h])

        def put(p2, flag):
            if new.get(p2) is not True:
                if p2 not in new or flag:
                    new[p2] = flag

        for p2, kind, b in pds.rules(p, a):
            if kind == RETURN:
                put(p2, fp)
            elif kind == INTERNAL:
                need((p2, b), h)
                for q, f in summ[(p2, b)].items():
                    put(q, fp or f)
            else:
                need((p2, b), h)
                for q, f1 in list(summ[(p2, b)].items()):
                    need((q, a), h)
                    for r, f2 in summ[(q, a)].items():
                        put(r, fp or f1 or f2)
        if new != summ[h]:
            summ[h] = new
            for d in deps[h]:
                work.append(d)
    return summ, set(summ)


def repeated_head(pds, A: PAutomaton, is_target: Callable):
    """Is there an infinite run from L(A) visiting a target state infinitely often?

    Returns a head (state, top letter) on such a run's repeating cycle, or None.
    """
    reach = post_star(pds, A)
    start = sorted(reach.heads(), key=repr)
    return repeated_from_heads(pds, start, is_target)


def repeated_from_heads(pds, start: list, is_target: Callable):
    if not start:
        return None
    summ, _ = _summaries(pds, start, is_target)
    edges: dict = {}

    def succ(h):
        got = edges.get(h)
        if got is not None:
            return [w for w, _ in got]
        p, a = h
        fp = bool(is_target(p))
        out = []
        for p2, kind, b in pds.rules(p, a):
            if kind == INTERNAL:
                out.append(((p2, b), fp))
            elif kind == CALL:
                out.append(((p2, b), fp))
                for q, f in summ.get((p2, b), {}).items():
                    out.append(((q, a), fp or f))
        edges[h] = out
        return [w for w, _ in out]

    for comp in _tarjan(start, succ):
        members = set(comp)
        for h in comp:
            for w, flag in edges.get(h, ()):
                if flag and w in members:
                    return h
    return None
