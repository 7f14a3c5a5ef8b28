"""Explicit-state ground truth for small instances.

Configurations are explored breadth-first with every stack height capped at
H.  When a context bound k is given, a vertex is a (configuration, switches
so far) pair with at most k-1 switches; a cycle can then never contain a
switch, since switches only increase the counter.  Acceptance of a cycle is
decided per strongly connected component.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from . import logic as L
from .mpds import (BOT, CALL, INTERNAL, RETURN, Config, EnhancedMpds, LassoRun, RunPrefix,
                   is_k_bounded, successors)
from .pda import strongly_connected_components
from .product import Product, apply_effect, project
from .semantics import evaluate
from .solver import MpdsSystem, ProductSystem, Verdict, bmc

DEFAULT_HEIGHT = 8
DEFAULT_BUDGET = 2_000_000


class ResourceError(RuntimeError):
    pass


@dataclass
class ConfigGraph:
    system: object
    vertices: list = field(default_factory=list)      # (Config, switches)
    index: dict = field(default_factory=dict)
    edges: list = field(default_factory=list)         # per vertex: [(w, rid, action)]
    truncated: set = field(default_factory=set)
    initial: list = field(default_factory=list)
    k: int | None = None

    def __len__(self) -> int:
        return len(self.vertices)

    def configs(self) -> set:
        return {c for c, _ in self.vertices}


def explore(system, initial: Sequence, H: int = DEFAULT_HEIGHT, budget: int = DEFAULT_BUDGET,
            k: int | None = None) -> ConfigGraph:
    """Reachable configurations with stack heights at most H (bottom included)."""
    if H < 1:
        raise ValueError("height cutoff must be at least 1")
    n = system.stack_count
    g = ConfigGraph(system, k=k)

    def intern(v) -> int:
        i = g.index.get(v)
        if i is None:
            if len(g.vertices) >= budget:
                raise ResourceError(f"vertex budget of {budget} exceeded")
            i = g.index[v] = len(g.vertices)
            g.vertices.append(v)
            g.edges.append([])
            todo.append(i)
        return i

    todo: deque = deque()
    for q in initial:
        c = Config(q, tuple((system.bottom(j),) for j in range(1, n + 1)))
        i = intern((c, 0))
        if i not in g.initial:
            g.initial.append(i)
    while todo:
        i = todo.popleft()
        c, sw = g.vertices[i]
        s = system.active_stack(c.state)
        top = c.stacks[s - 1][-1]
        out = []
        for rid, q2, eff in system.successors(c.state, top):
            stacks = apply_effect(c.stacks, s, eff)
            if len(stacks[s - 1]) > H:
                g.truncated.add(i)
                continue
            sw2 = sw
            if k is not None and system.active_stack(q2) != s:
                sw2 += 1
                if sw2 > k - 1:
                    continue
            out.append((intern((Config(q2, stacks), sw2)), rid, eff[0]))
        g.edges[i] = out
    return g


def _bfs_path(g: ConfigGraph, sources: Sequence[int], goal: Callable[[int], bool],
              allowed: set | None = None, nonempty: bool = False) -> list[int] | None:
    """Shortest vertex path from a source to a goal vertex, optionally with
    at least one edge, staying inside ``allowed``."""
    parent: dict = {}
    todo: deque = deque()

    def succ(v):
        return [w for w, _, _ in g.edges[v] if allowed is None or w in allowed]

    for s in sources:
        if nonempty:
            for w in succ(s):
                if w not in parent:
                    parent[w] = ("root", s)
                    todo.append(w)
        elif s not in parent:
            parent[s] = ("root", None)
            todo.append(s)
    while todo:
        v = todo.popleft()
        if goal(v):
            path = [v]
            p = parent[v]
            while not isinstance(p, tuple):
                path.append(p)
                p = parent[p]
            if p[1] is not None:
                path.append(p[1])
            return path[::-1]
        for w in succ(v):
            if w not in parent:
                parent[w] = v
                todo.append(w)
    return None


def _edge(g: ConfigGraph, v: int, w: int) -> tuple:
    for x, rid, act in g.edges[v]:
        if x == w:
            return rid, act
    raise KeyError((v, w))


def _lasso_from(g: ConfigGraph, path: list[int], loop: int) -> LassoRun:
    system = g.system
    configs = [g.vertices[v][0] for v in path]
    active, actions, rules = [], [], []
    for v, w in zip(path, path[1:]):
        rid, act = _edge(g, v, w)
        active.append(system.active_stack(g.vertices[v][0].state))
        actions.append(act)
        rules.append(rid)
    return LassoRun(RunPrefix(tuple(configs), tuple(active), tuple(actions), tuple(rules)), loop)


def find_accepting_lasso(g: ConfigGraph, preds: Sequence[Callable],
                         stay_possible: bool = True):
    """("lasso", LassoRun) | ("none", None) | ("inconclusive", None).

    A cycle must visit a state satisfying every predicate.  Without a lasso
    the answer is inconclusive when a height-truncated vertex is reachable
    and the system has steps that keep the active stack (only those can form
    the cycle of a bounded run).
    """
    n = len(g)
    comps = strongly_connected_components(range(n), lambda v: [w for w, _, _ in g.edges[v]])
    for comp in sorted(comps, key=min):
        members = set(comp)
        if len(comp) == 1:
            v = comp[0]
            if not any(w == v for w, _, _ in g.edges[v]):
                continue
        hits = []
        for p in preds:
            hit = next((v for v in sorted(comp) if p(g.vertices[v][0].state)), None)
            if hit is None:
                break
            hits.append(hit)
        else:
            v0 = min(comp)
            stem = _bfs_path(g, g.initial, lambda v: v == v0)
            if stem is None:
                continue
            cycle = [v0]
            for h in hits:
                if cycle[-1] != h:
                    seg = _bfs_path(g, [cycle[-1]], lambda v, h=h: v == h, members)
                    cycle += seg[1:]
            seg = _bfs_path(g, [cycle[-1]], lambda v: v == v0, members,
                            nonempty=len(cycle) == 1)
            if len(cycle) == 1:
                cycle = seg
            else:
                cycle += seg[1:]
            path = stem + cycle[1:]
            return "lasso", _lasso_from(g, path, len(stem) - 1)
    if g.truncated and stay_possible:
        return "inconclusive", None
    return "none", None


# ----------------------------------------------------------------- drivers

@dataclass
class OracleResult:
    answer: str                 # yes | no | inconclusive
    lasso: LassoRun | None = None
    vertices: int = 0
    truncated: int = 0


def oracle_bmc(empds: EnhancedMpds, g0, i0: int, formula: L.Formula, k: int,
               automata: Mapping | None = None, H: int = DEFAULT_HEIGHT,
               budget: int = DEFAULT_BUDGET) -> OracleResult:
    """Explicit search for an accepting k-bounded lasso of the product."""
    product = Product(empds, formula, automata)
    system = ProductSystem(product)
    g = explore(system, product.initial_states(g0, i0), H, budget, k)
    preds = [p for _, p in product.acceptance_family()]
    kind, lasso = find_accepting_lasso(g, preds, system.has_staying_rules())
    ans = {"lasso": "yes", "none": "no"}.get(kind, kind)
    res = OracleResult(ans, lasso, len(g), len(g.truncated))
    if lasso is not None:
        check_witness(empds, formula, k, lasso, automata)
    return res


def oracle_brep(empds: EnhancedMpds, initial, target, k: int, H: int = DEFAULT_HEIGHT,
                budget: int = DEFAULT_BUDGET) -> OracleResult:
    system = MpdsSystem(empds)
    g = explore(system, [initial], H, budget, k)
    kind, lasso = find_accepting_lasso(g, [lambda q: q == target], system.has_staying_rules())
    ans = {"lasso": "yes", "none": "no"}.get(kind, kind)
    return OracleResult(ans, lasso, len(g), len(g.truncated))


class WitnessError(AssertionError):
    pass


def check_witness(empds: EnhancedMpds, formula: L.Formula, k: int, lasso: LassoRun,
                  automata: Mapping | None = None) -> None:
    """A product lasso must project to a k-bounded run of the system satisfying the formula."""
    base = project(lasso)
    run = base.run
    for t in range(base.length):
        c, c2 = run.configs[t], run.configs[t + 1]
        if not any(rule.rid == run.rules[t] and d == c2 for rule, d in successors(empds, c)):
            raise WitnessError(f"step {t} does not replay")
    if not is_k_bounded(run.active, k, base.loop):
        raise WitnessError("witness is not k-bounded")
    if not evaluate(base, 0, formula, automata, enhanced=True):
        raise WitnessError("witness does not satisfy the formula")


def base_lassos(empds: EnhancedMpds, initial, k: int, max_len: int, H: int = DEFAULT_HEIGHT):
    """All simple k-bounded lassos of the system with at most max_len steps."""
    n = empds.stack_count
    start = Config(initial, tuple((BOT,) for _ in range(n)))
    configs, active, actions, rules = [start], [], [], []
    pos = {start: 0}

    def rec():
        c = configs[-1]
        if len(active) >= max_len:
            return
        for rule, c2 in successors(empds, c):
            if max(len(w) for w in c2.stacks) > H:
                continue
            active.append(rule.stack)
            actions.append(rule.action)
            rules.append(rule.rid)
            configs.append(c2)
            if c2 in pos:
                lasso_active = tuple(active)
                if is_k_bounded(lasso_active, k, pos[c2]):
                    yield LassoRun(RunPrefix(tuple(configs), lasso_active, tuple(actions),
                                             tuple(rules)), pos[c2])
            elif is_k_bounded(active, k):
                pos[c2] = len(configs) - 1
                yield from rec()
                del pos[c2]
            configs.pop()
            active.pop()
            actions.pop()
            rules.pop()

    yield from rec()


def semantic_witness(empds: EnhancedMpds, initial, formula: L.Formula, k: int,
                     max_len: int = 8, automata: Mapping | None = None,
                     H: int = DEFAULT_HEIGHT) -> LassoRun | None:
    """A short lasso of the system on which the formula holds, if one exists."""
    for lasso in base_lassos(empds, initial, k, max_len, H):
        if evaluate(lasso, 0, formula, automata, enhanced=True):
            return lasso
    return None


def cross_check(empds: EnhancedMpds, g0, i0: int, formula: L.Formula, k: int,
                verdict: Verdict | None = None, automata: Mapping | None = None,
                H: int = DEFAULT_HEIGHT, budget: int = DEFAULT_BUDGET) -> tuple[str, Verdict, OracleResult]:
    """Compare the solver with the oracle: agree | disagree | inconclusive."""
    if verdict is None:
        verdict = bmc(empds, g0, i0, formula, k, automata)
    res = oracle_bmc(empds, g0, i0, formula, k, automata, H, budget)
    if res.answer == "inconclusive":
        return "inconclusive", verdict, res
    return ("agree" if res.answer == verdict.answer else "disagree"), verdict, res


# ------------------------------------------------------------------- json

def _letter_json(x):
    if isinstance(x, str):
        return x
    return {"letter": x.letter, "atom": x.atom, "willreturn": x.ret,
            "snap": [sorted(map(str, s)) for s in x.snap]}


def _state_json(q):
    if isinstance(q, tuple) and hasattr(q, "_fields"):
        return {"g": q.g, "s": q.s, "atoms": list(q.atoms), "willreturn": list(q.rets),
                "alive": list(q.alive), "regs": [sorted(map(str, r)) for r in q.regs]}
    if isinstance(q, tuple):
        return {"g": q[0], "s": q[1]}
    return {"g": q}


def lasso_to_json(lasso: LassoRun) -> dict:
    run = lasso.run
    return {
        "configs": [{"state": _state_json(c.state),
                     "stacks": [[_letter_json(x) for x in w] for w in c.stacks]}
                    for c in run.configs],
        "loop": lasso.loop,
        "rules": list(run.rules),
        "active": list(run.active),
        "actions": list(run.actions),
    }
