"""Bounded repeated reachability and the bounded model checking driver.

A k-bounded run has at most k contexts.  The search walks context skeletons
depth-first: in context alpha the stack i is analysed alone with post*,
starting from the configurations whose i-stack lies in the regular set left
by the previous context on i.  Every state reached there that hands control
to another stack is a candidate switch point and opens the next context.  In
each context the repeated-head check decides whether an infinite run can
stay on stack i forever while visiting the target infinitely often.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from . import logic as L
from .mpds import BOT, RETURN, EnhancedMpds, MpdsError
from .pda import LazyPds, SaturationStats, fsa_of, pa_of, post_star, repeated_head, single_word_fsa
from .product import Product


class MpdsSystem:
    """Lazy successor interface over an enhanced system (no formula)."""

    def __init__(self, empds: EnhancedMpds):
        self.system = empds
        self.stack_count = empds.stack_count

    def active_stack(self, state) -> int:
        return state[1]

    def bottom(self, j: int):
        return BOT

    def successors(self, state, top) -> list[tuple]:
        out = []
        for r in self.system.rules_for(state, state[1], top):
            eff = (RETURN, None) if r.action == RETURN else (r.action, r.letter)
            out.append((r.rid, r.target, eff))
        return out

    def can_settle(self, state) -> bool:
        return True

    def global_of(self, state):
        return state

    def has_staying_rules(self) -> bool:
        return any(r.target[1] == r.stack for r in self.system.rules)

    def global_state_count(self) -> int:
        return len(self.system.states)


class ProductSystem:
    """Lazy successor interface over a product with a formula."""

    def __init__(self, product: Product):
        self.product = product
        self.stack_count = product.stack_count

    def active_stack(self, state) -> int:
        return state.s

    def bottom(self, j: int):
        return self.product.bottom(j)

    def successors(self, state, top) -> list[tuple]:
        return self.product.successors(state, top)

    def global_of(self, state):
        return (state.g, state.s)

    def can_settle(self, state) -> bool:
        # other stacks never become active again, so they must be dead
        return all(not d for j, d in enumerate(state.alive, 1) if j != state.s)

    def has_staying_rules(self) -> bool:
        return any(r.target[1] == r.stack for r in self.product.system.rules)

    def global_state_count(self) -> int:
        return self.product.global_state_count()


class Degeneralized:
    """Counter wrapper turning a family of predicates into one target.

    States are (inner, c).  The counter moves to c+1 (mod |F|) when the
    current state satisfies predicate c; the target is c == 0 together with
    predicate 0.
    """

    def __init__(self, system, preds: Sequence[Callable]):
        if not preds:
            raise ValueError("empty acceptance family")
        self.inner = system
        self.preds = list(preds)
        self.stack_count = system.stack_count

    def active_stack(self, state) -> int:
        return self.inner.active_stack(state[0])

    def bottom(self, j: int):
        return self.inner.bottom(j)

    def advance(self, state) -> int:
        q, c = state
        return (c + 1) % len(self.preds) if self.preds[c](q) else c

    def successors(self, state, top) -> list[tuple]:
        c2 = self.advance(state)
        return [(rid, (q2, c2), eff) for rid, q2, eff in self.inner.successors(state[0], top)]

    def is_target(self, state) -> bool:
        return state[1] == 0 and self.preds[0](state[0])


def degeneralize(system, family: Sequence) -> tuple[Degeneralized, Callable]:
    preds = [p[1] if isinstance(p, tuple) else p for p in family]
    wrapped = Degeneralized(system, preds)
    return wrapped, wrapped.is_target


@dataclass
class Verdict:
    answer: str
    witness: dict | None = None
    stats: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.answer == "yes"

    def to_json(self) -> dict:
        return {"result": self.answer, "witness": self.witness, "stats": self.stats}


class _Search:
    def __init__(self, system, preds: Sequence[Callable], k: int):
        self.system = system
        self.wrapped = Degeneralized(system, preds)
        self.k = k
        self.sat = SaturationStats()
        self.audit: list[dict] = []
        self.alpha_ops = 0
        self.saturations = 0
        self.repeated_checks = 0
        self.skeletons = 0
        self._P = None
        self._pds: dict = {}
        self._wpds: dict = {}

    @property
    def P(self) -> int:
        if self._P is None:
            self._P = self.system.global_state_count()
        return self._P

    def pds(self, i: int) -> LazyPds:
        if i not in self._pds:
            self._pds[i] = LazyPds(self.system, i)
            self._wpds[i] = LazyPds(self.wrapped, i)
        return self._pds[i]

    def _log(self, op: str, alpha: int, before: int, after: int, path: int) -> int:
        """Record one alpha-loop operation; returns the growth summed along the skeleton."""
        self.alpha_ops += 1
        path += after - before
        self.audit.append({"op": op, "alpha": alpha, "before": before, "after": after,
                           "path_growth": path})
        return path

    def run(self, heads: list) -> dict | None:
        n = self.system.stack_count
        fsas = tuple(single_word_fsa([self.system.bottom(j)], ("bottom", j))
                     for j in range(1, n + 1))
        return self._context(1, heads, fsas, [], 0)

    def _context(self, alpha: int, heads: list, fsas: tuple, skeleton: list,
                 growth: int) -> dict | None:
        i = self.system.active_stack(heads[0])
        pa = pa_of(fsas[i - 1], heads)
        growth = self._log("pa", alpha, fsas[i - 1].state_count(), pa.state_count(), growth)
        B = post_star(self.pds(i), pa, self.sat)
        self.saturations += 1
        growth = self._log("post*", alpha, pa.state_count(), B.state_count(), growth)
        g, s = self.system.global_of(heads[0])
        skel = skeleton + [{"state": [g, s], "automaton_states": B.state_count()}]
        self.skeletons += 1
        settle = [h for h in heads if self.system.can_settle(h)]
        if settle:
            self.repeated_checks += 1
            wpa = pa_of(fsas[i - 1], [(h, 0) for h in settle])
            head = repeated_head(self._wpds[i], wpa, self.wrapped.is_target)
            if head is not None:
                (q, _), top = head
                g2, s2 = self.system.global_of(q)
                letter = top if isinstance(top, str) else top.letter
                return {"skeleton": skel, "repeated_head": [g2, s2, letter]}
        if alpha >= self.k:
            return None
        live = B.coaccessible()
        exits = []
        for p in B.control_states():
            if self.system.active_stack(p) == i:
                continue
            if any(q in live for q in B._start(p)):
                exits.append(p)
        for p in sorted(exits, key=repr):
            F = fsa_of(B, p)
            g2 = self._log("fsa", alpha, B.state_count(), F.state_count(), growth)
            nf = fsas[:i - 1] + (F,) + fsas[i:]
            got = self._context(alpha + 1, [p], nf, skel, g2)
            if got is not None:
                return got
        return None


def brep(system, initial: Sequence, preds: Sequence[Callable], k: int) -> Verdict:
    """Is there a run from one of ``initial`` (empty stacks) with at most k
    contexts that satisfies every predicate in ``preds`` infinitely often?"""
    if k < 1:
        raise ValueError("the context bound k must be at least 1")
    t0 = time.perf_counter()
    search = _Search(system, preds, k)
    heads = sorted(set(initial), key=repr)
    witness = None
    if heads:
        stacks = {system.active_stack(h) for h in heads}
        if len(stacks) != 1:
            raise ValueError("initial states must share their active stack")
        witness = search.run(heads)
    stats = {
        "saturations": search.saturations,
        "skeletons": search.skeletons,
        "repeated_checks": search.repeated_checks,
        "states_created": sum(max(0, a - b) for _, b, a in search.sat.ops),
        "alpha_ops": search.alpha_ops,
        "wall_time": time.perf_counter() - t0,
    }
    v = Verdict("yes" if witness is not None else "no", witness, stats)
    v.audit = search.audit
    v.search = search
    return v


def brep_single(empds: EnhancedMpds, initial, target, k: int) -> Verdict:
    """Repeated reachability of the global state ``target`` under bound k."""
    if target not in empds.states:
        raise MpdsError(f"unknown target state {target!r}")
    return brep(MpdsSystem(empds), [initial], [lambda q: q == target], k)


def bmc(empds: EnhancedMpds, g0, i0: int, formula: L.Formula, k: int,
        automata: Mapping | None = None) -> Verdict:
    """Does some k-bounded infinite run from (g0, i0) satisfy ``formula``?"""
    if k < 1:
        raise ValueError("the context bound k must be at least 1")
    if (g0, i0) not in empds.states:
        raise MpdsError(f"unknown initial state ({g0}, {i0})")
    t0 = time.perf_counter()
    product = Product(empds, formula, automata)
    inits = product.initial_states(g0, i0)
    fam = product.acceptance_family()
    v = brep(ProductSystem(product), inits, [p for _, p in fam], k)
    v.stats["initial_states"] = len(inits)
    v.stats["closure_size"] = len(product.cl)
    v.stats["family_size"] = len(fam)
    v.stats["wall_time"] = time.perf_counter() - t0
    v.product = product
    return v
