"""Reference satisfaction relation over lasso runs.

The infinite run is prefix . cycle^omega.  Because the cycle closes on the
same configuration, stack heights are periodic and the truth of future-only
formulas is periodic with the cycle.  Caller operators look into the past, so
their truth may differ between the first copies of the cycle; the evaluator
unrolls the cycle into a window of K copies and grows K until the last two
copies agree on every subformula.  Positions past the window fold back onto
the last copy.
"""
from __future__ import annotations

from typing import Mapping

from . import logic as L
from .logic import Formula
from .mpds import LassoRun

MAX_COPIES = 64


class EvaluationError(RuntimeError):
    pass


class Evaluator:
    def __init__(self, lasso: LassoRun, automata: Mapping | None = None,
                 enhanced: bool | None = None):
        self.lasso = lasso
        self.automata = dict(automata or {})
        run = lasso.run
        if enhanced is None:
            enhanced = isinstance(run.configs[0].state, tuple)
        self.enhanced = enhanced
        self.P = lasso.loop
        self.C = lasso.period
        self.copies = 2
        self._cache: dict = {}

    # ---------------------------------------------------------- run access
    @property
    def window(self) -> int:
        return self.P + self.copies * self.C

    def fold(self, t: int) -> int:
        w = self.window
        if t < w:
            return t
        return t - self.C * ((t - w) // self.C + 1)

    def config(self, t: int):
        return self.lasso.run.configs[self.lasso.index(t)]

    def active(self, t: int) -> int:
        return self.lasso.run.active[self.lasso.index(t)]

    def action(self, t: int) -> str:
        return self.lasso.run.actions[self.lasso.index(t)]

    def height(self, t: int, s: int) -> int:
        return len(self.config(t).stacks[s - 1])

    def base_state(self, t: int):
        st = self.config(t).state
        return st[0] if self.enhanced else st

    def _horizon(self, t: int) -> int:
        return max(t, self.P) + self.C

    # ------------------------------------------------------ successor maps
    def next_active(self, t: int, s: int, strict: bool = True) -> int | None:
        start = t + 1 if strict else t
        for u in range(start, self._horizon(t) + 1):
            if self.active(u) == s:
                return u
        return None

    def abstract_succ(self, t: int, s: int) -> int | None:
        if self.active(t) != s:
            return None
        act = self.action(t)
        if act == "return":
            return None
        if act == "internal":
            return self.next_active(t, s)
        h = self.height(t, s)
        for u in range(t + 1, self._horizon(t) + 1):
            if self.active(u) == s and self.height(u, s) == h:
                return u
        return None

    def caller_succ(self, t: int, s: int) -> int | None:
        h = self.height(t, s) - 1
        for u in range(t - 1, -1, -1):
            if self.active(u) == s and self.height(u, s) == h:
                return u
        return None

    def last_active(self, t: int, s: int) -> int | None:
        for u in range(t, -1, -1):
            if self.active(u) == s:
                return u
        return None

    # ----------------------------------------------------------- evaluation
    def truth(self, f: Formula) -> list[bool]:
        """Truth values of ``f`` at every window position."""
        while True:
            vals = self._truth(f)
            if self._stable(f):
                return vals
            if self.copies >= MAX_COPIES:
                raise EvaluationError("caller operators never stabilise on this lasso")
            self.copies += 1
            self._cache.clear()

    def _stable(self, f: Formula) -> bool:
        w, c = self.window, self.C
        for sub in set(f.subformulas()):
            v = self._cache[sub]
            if v[w - 2 * c:w - c] != v[w - c:w]:
                return False
        return True

    def holds(self, t: int, f: Formula) -> bool:
        vals = self.truth(f)
        return vals[self.fold(t)]

    def _truth(self, f: Formula) -> list[bool]:
        got = self._cache.get(f)
        if got is not None:
            return got
        vals = self._compute(f)
        self._cache[f] = vals
        return vals

    def _compute(self, f: Formula) -> list[bool]:
        w = self.window
        rng = range(w)
        op = f.op
        if op == L.STATE:
            return [self.active(t) == f.stack and self.base_state(t) == f.name for t in rng]
        if op == L.STACK:
            return [self.active(t) == f.stack for t in rng]
        if op == L.ACTION:
            return [self.action(t) == f.name for t in rng]
        if op == L.IN:
            nfa = self.automata.get(f.name)
            if nfa is None:
                raise EvaluationError(f"unknown automaton {f.name!r}")
            return [nfa.accepts(self.config(t).stacks[f.stack - 1]) for t in rng]
        a = [self._truth(x) for x in f.args]
        if op == L.NOT:
            return [not v for v in a[0]]
        if op == L.OR:
            return [x or y for x, y in zip(a[0], a[1])]
        if op == L.NEXT:
            return [a[0][self.fold(t + 1)] for t in rng]
        if op == L.SNEXT:
            out = []
            for t in rng:
                # the first position from t on (inclusive) where the stack is active
                u = self.next_active(t, f.stack, strict=False)
                out.append(u is not None and a[0][self.fold(u)])
            return out
        if op in (L.ANEXT, L.ANEXT_ANY):
            out = []
            for t in rng:
                s = f.stack if op == L.ANEXT else self.active(t)
                u = self.abstract_succ(t, s)
                out.append(u is not None and a[0][self.fold(u)])
            return out
        if op == L.CNEXT:
            out = []
            for t in rng:
                u = self.caller_succ(t, f.stack)
                out.append(u is not None and a[0][u])
            return out
        if op == L.UNTIL:
            succ = [self.fold(t + 1) for t in rng]
            return self._lfp(a[0], a[1], succ, [True] * w)
        if op in (L.AUNTIL, L.AUNTIL_ANY):
            stacks = [f.stack] if op == L.AUNTIL else range(1, len(self.lasso.run.configs[0].stacks) + 1)
            star = {}
            for s in stacks:
                succ = []
                for t in rng:
                    u = self.abstract_succ(t, s)
                    succ.append(None if u is None else self.fold(u))
                mask = [self.active(t) == s for t in rng]
                star[s] = self._lfp(a[0], a[1], succ, mask)
            out = []
            for t in rng:
                if op == L.AUNTIL_ANY:
                    out.append(star[self.active(t)][t])
                    continue
                i0 = self.next_active(t, f.stack, strict=False)
                out.append(i0 is not None and star[f.stack][self.fold(i0)])
            return out
        if op == L.CUNTIL:
            s = f.stack
            star = [False] * w
            for t in rng:
                if self.active(t) != s:
                    continue
                u = self.caller_succ(t, s)
                star[t] = a[1][t] or (a[0][t] and u is not None and star[u])
            out = []
            for t in rng:
                i0 = self.last_active(t, s)
                out.append(i0 is not None and star[i0])
            return out
        raise EvaluationError(f"unknown operator {op}")

    @staticmethod
    def _lfp(p1: list[bool], p2: list[bool], succ: list, mask: list[bool]) -> list[bool]:
        """Least solution of v[t] = p2[t] or (p1[t] and v[succ[t]]) on masked t."""
        n = len(p1)
        v = [False] * n
        changed = True
        while changed:
            changed = False
            for t in range(n - 1, -1, -1):
                if v[t] or not mask[t]:
                    continue
                u = succ[t]
                if p2[t] or (p1[t] and u is not None and v[u]):
                    v[t] = True
                    changed = True
        return v


def evaluate(lasso: LassoRun, t: int, formula: Formula, automata: Mapping | None = None,
             enhanced: bool | None = None) -> bool:
    return Evaluator(lasso, automata, enhanced).holds(t, formula)


def abstract_succ(lasso: LassoRun, t: int, s: int) -> int | None:
    return Evaluator(lasso).abstract_succ(t, s)


def caller_succ(lasso: LassoRun, t: int, s: int) -> int | None:
    return Evaluator(lasso).caller_succ(t, s)
