"""Closure sets and atoms.

Atoms are stored as integer bitmasks over the closure indices.  Two flavours
of atom exist:

* plain atoms (``atoms``): the four local consistency rules on negation,
  disjunction, until and the single state element;
* stack atoms (``stack_atoms``): the formulas that hold the next time stack j
  is active.  On top of the plain rules they fix the stack-activity leaves,
  restrict the state element to stack j, unfold j's abstract and caller
  untils, make abstract-next on other stacks false and keep the action leaves
  mutually exclusive.

Both are produced by a depth-first search over the free leaves with forced
true/false masks, never by filtering all subsets.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as _product
from typing import Iterator, Sequence

from . import logic as L
from .logic import Formula


@dataclass
class Closure:
    formula: Formula
    states: tuple[str, ...]
    stack_count: int
    items: list[Formula] = field(default_factory=list)
    index: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        todo = [self.formula] + [L.state(g, s) for g in self.states
                                 for s in range(1, self.stack_count + 1)]
        while todo:
            f = todo.pop(0)
            if f in self.index:
                continue
            self.index[f] = len(self.items)
            self.items.append(f)
            todo.extend(f.args)
            if f.op in L.NEXT_OF:
                todo.append(Formula(L.NEXT_OF[f.op], (f,), f.stack))
            if f.op != L.NOT:
                todo.append(L.neg(f))
        self._neg = [self.index.get(L.negate(f), -1) for f in self.items]
        self._pos = [i for i, f in enumerate(self.items) if f.op != L.NOT]

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __contains__(self, f: Formula) -> bool:
        return f in self.index

    def bit(self, f: Formula) -> int:
        return 1 << self.index[f]

    def negation(self, i: int) -> int:
        return self._neg[i]

    def members(self, mask: int) -> list[Formula]:
        return [f for i, f in enumerate(self.items) if mask >> i & 1]

    def mask_of(self, formulas) -> int:
        m = 0
        for f in formulas:
            m |= 1 << self.index[f]
        return m

    def of_kind(self, *ops: str, stack: int | None = None) -> list[int]:
        return [i for i, f in enumerate(self.items)
                if f.op in ops and (stack is None or f.stack == stack)]


def closure(formula: Formula, states: Sequence[str], stack_count: int) -> Closure:
    if not L.is_primitive(formula):
        raise ValueError("rewrite derived operators before building the closure")
    return Closure(formula, tuple(states), stack_count)


# -------------------------------------------------------------- atom search

class _Plan:
    """Evaluation order for one atom flavour.

    Free leaves are decided one at a time; ``after_leaf[k]`` lists the
    derived nodes (not / or / until) that become computable once the first k
    leaves are set.  Groups (one state element, at most one action) are
    chosen before any leaf.
    """

    def __init__(self, cl: Closure, stack_j: int | None):
        self.cl = cl
        items = cl.items
        idx = cl.index
        derived: dict[int, tuple] = {}
        fixed: dict[int, bool] = {}
        state_ids = [i for i, f in enumerate(items) if f.op == L.STATE]
        action_ids = [i for i, f in enumerate(items) if f.op == L.ACTION]
        for i, f in enumerate(items):
            if f.op == L.NOT:
                derived[i] = ("not", idx[f.args[0]])
            elif f.op == L.OR:
                derived[i] = ("or", idx[f.args[0]], idx[f.args[1]])
            elif f.op == L.UNTIL:
                derived[i] = ("until", idx[f.args[0]], idx[f.args[1]],
                              idx[Formula(L.NEXT, (f,))])
            elif stack_j is not None and f.op in (L.AUNTIL, L.CUNTIL) and f.stack == stack_j:
                derived[i] = ("until", idx[f.args[0]], idx[f.args[1]],
                              idx[Formula(L.NEXT_OF[f.op], (f,), f.stack)])
            elif stack_j is not None and f.op == L.STACK:
                fixed[i] = f.stack == stack_j
            elif stack_j is not None and f.op == L.ANEXT and f.stack != stack_j:
                fixed[i] = False
        if stack_j is not None:
            state_ids_j = [i for i in state_ids if items[i].stack == stack_j]
            for i in state_ids:
                if i not in state_ids_j:
                    fixed[i] = False
            self.state_choices = state_ids_j
            full = len(action_ids) == 3
            self.action_choices = [[i] for i in action_ids] + ([] if full else [[]])
        else:
            self.state_choices = state_ids
            self.action_choices = None
        grouped = set(state_ids) | (set(action_ids) if stack_j is not None else set())
        self.fixed = fixed
        self.derived = derived
        self.leaves = [i for i in range(len(items))
                       if i not in derived and i not in fixed and i not in grouped]
        self.grouped_false = [i for i in grouped if i not in fixed]
        self.action_ids = action_ids if stack_j is not None else []
        # derived nodes in dependency order
        order, seen = [], set()

        def visit(i: int) -> None:
            if i in seen or i not in derived:
                return
            seen.add(i)
            for d in derived[i][1:]:
                visit(d)
            order.append(i)

        for i in sorted(derived, key=lambda i: items[i].size):
            visit(i)
        # interleave: each derived node right after the last leaf it needs
        leaf_pos = {i: k for k, i in enumerate(self.leaves)}
        deps_leafpos: dict[int, int] = {}
        for i in order:
            m = -1
            for d in derived[i][1:]:
                if d in derived:
                    m = max(m, deps_leafpos[d])
                elif d in leaf_pos:
                    m = max(m, leaf_pos[d])
            deps_leafpos[i] = m
        self.after_leaf: list[list[int]] = [[] for _ in range(len(self.leaves) + 1)]
        for i in order:
            self.after_leaf[deps_leafpos[i] + 1].append(i)


def _search(plan: _Plan, must: int, forbid: int) -> Iterator[int]:
    fixed_mask = 0
    for i, v in plan.fixed.items():
        if v:
            fixed_mask |= 1 << i
    fixed_false = 0
    for i, v in plan.fixed.items():
        if not v:
            fixed_false |= 1 << i
    if fixed_mask & forbid or fixed_false & must:
        return
    derived = plan.derived
    leaves = plan.leaves
    after = plan.after_leaf

    def compute(mask: int, nodes: list[int]) -> int | None:
        for i in nodes:
            d = derived[i]
            kind = d[0]
            if kind == "not":
                v = not (mask >> d[1] & 1)
            elif kind == "or":
                v = bool(mask >> d[1] & 1) or bool(mask >> d[2] & 1)
            else:
                v = bool(mask >> d[2] & 1) or (bool(mask >> d[1] & 1) and bool(mask >> d[3] & 1))
            bit = 1 << i
            if v:
                if forbid & bit:
                    return None
                mask |= bit
            elif must & bit:
                return None
        return mask

    def rec(k: int, mask: int) -> Iterator[int]:
        m = compute(mask, after[k])
        if m is None:
            return
        if k == len(leaves):
            yield m
            return
        bit = 1 << leaves[k]
        if not must & bit:
            yield from rec(k + 1, m)
        if not forbid & bit:
            yield from rec(k + 1, m | bit)

    group_bits = 0
    for i in plan.grouped_false:
        group_bits |= 1 << i
    actions = plan.action_choices if plan.action_choices is not None else [[]]
    for st, act in _product(plan.state_choices, actions):
        chosen = [st] + act
        base = fixed_mask
        ok = True
        for i in chosen:
            if forbid >> i & 1:
                ok = False
            base |= 1 << i
        if not ok or (must & group_bits & ~base):
            continue
        yield from rec(0, base)


def _plan(cl: Closure, stack_j: int | None) -> _Plan:
    plans = cl.__dict__.setdefault("_plans", {})
    if stack_j not in plans:
        plans[stack_j] = _Plan(cl, stack_j)
    return plans[stack_j]


def atoms(cl: Closure, must: int = 0, forbid: int = 0) -> Iterator[int]:
    """Lazy stream of the (non-empty) plain atoms containing ``must`` and
    disjoint from ``forbid``."""
    return _search(_plan(cl, None), must, forbid)


def stack_atoms(cl: Closure, j: int, must: int = 0, forbid: int = 0) -> Iterator[int]:
    """Lazy stream of the atoms describing a position where stack j is active."""
    return _search(_plan(cl, j), must, forbid)


# ---------------------------------------------------- direct rule checking

def is_atom(cl: Closure, mask: int) -> bool:
    """The plain atom rules, checked element by element."""
    items, idx = cl.items, cl.index
    has = lambda f: bool(mask >> idx[f] & 1)  # noqa: E731
    for f in items:
        if f.op == L.NOT and has(f) == has(f.args[0]):
            return False
        if f.op == L.OR and has(f) != (has(f.args[0]) or has(f.args[1])):
            return False
        if f.op == L.UNTIL and has(f) != (
                has(f.args[1]) or (has(f.args[0]) and has(L.nxt(f)))):
            return False
    return sum(1 for f in items if f.op == L.STATE and has(f)) == 1


def is_stack_atom(cl: Closure, j: int, mask: int) -> bool:
    if not is_atom(cl, mask):
        return False
    items, idx = cl.items, cl.index
    has = lambda f: bool(mask >> idx[f] & 1)  # noqa: E731
    for f in items:
        if f.op == L.STATE and has(f) and f.stack != j:
            return False
        if f.op == L.STACK and has(f) != (f.stack == j):
            return False
        if f.op == L.ANEXT and f.stack != j and has(f):
            return False
        if f.op in (L.AUNTIL, L.CUNTIL) and f.stack == j:
            x = Formula(L.NEXT_OF[f.op], (f,), j)
            if has(f) != (has(f.args[1]) or (has(f.args[0]) and has(x))):
                return False
    acts = [f for f in items if f.op == L.ACTION]
    n = sum(1 for f in acts if has(f))
    if n > 1 or (len(acts) == 3 and n != 1):
        return False
    return True
