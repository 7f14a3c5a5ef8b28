"""Synchronized product of an enhanced system with a formula.

A product state records, besides the control state g and the active stack s,
for every stack j an atom A_j (the formulas holding the next time j is
active, or 0 once j is dead), a willreturn tag and an alive tag, plus one
automaton state-set per regularity constraint.  A product stack letter
records the letter, the caller's atom and tag at the time it was pushed and
the constraint state-sets of the content below it.

Successors are generated on demand from (state, top letter) and cached; the
product is never built eagerly.
"""
from __future__ import annotations

from itertools import product as _product
from typing import Callable, Iterator, Mapping, NamedTuple

from . import logic as L
from .closure import Closure, closure, stack_atoms
from .logic import Formula
from .mpds import BOT, CALL, INTERNAL, RETURN, Config, EnhancedMpds, LassoRun, RunPrefix
from .semantics import Evaluator


class AugState(NamedTuple):
    g: object
    s: int
    atoms: tuple[int, ...]
    rets: tuple[bool, ...]      # True = willreturn
    alive: tuple[bool, ...]
    regs: tuple[frozenset, ...] = ()

    def __repr__(self) -> str:
        tags = "".join(("W" if r else "N") + ("a" if d else "d")
                       for r, d in zip(self.rets, self.alive))
        return f"<{self.g},{self.s} {list(self.atoms)} {tags}>"


class AugLetter(NamedTuple):
    letter: str
    atom: int
    ret: bool
    snap: tuple[frozenset, ...] = ()


Effect = tuple  # ("call", AugLetter) | ("internal", AugLetter) | ("return", None)


def apply_effect(stacks: tuple, s: int, effect: Effect) -> tuple:
    w = stacks[s - 1]
    kind, letter = effect
    if kind == CALL:
        w2 = w + (letter,)
    elif kind == INTERNAL:
        w2 = w[:-1] + (letter,)
    else:
        w2 = w[:-1]
    return stacks[:s - 1] + (w2,) + stacks[s:]


class Product:
    """Lazy synchronized product of ``empds`` with a primitive formula."""

    def __init__(self, empds: EnhancedMpds, formula: Formula,
                 automata: Mapping | None = None):
        if not L.is_primitive(formula):
            formula = L.rewrite_derived(formula, empds.stack_count)
        self.system = empds
        self.formula = formula
        self.automata = dict(automata or {})
        self.stack_count = n = empds.stack_count
        self.cl: Closure = closure(formula, empds.base_states, n)
        cl, idx = self.cl, self.cl.index
        items = cl.items

        def pairs(op, s=None):
            return [(i, idx[f.args[0]]) for i, f in enumerate(items)
                    if f.op == op and (s is None or f.stack == s)]

        self.next_pairs = pairs(L.NEXT)
        self.anext_pairs = {s: pairs(L.ANEXT, s) for s in range(1, n + 1)}
        self.anext_mask = {s: _mask(i for i, _ in self.anext_pairs[s]) for s in self.anext_pairs}
        self.cnext_pairs = {s: pairs(L.CNEXT, s) for s in range(1, n + 1)}
        self.cnext_mask = {s: _mask(i for i, _ in self.cnext_pairs[s]) for s in self.cnext_pairs}
        self.auntil_mask = {s: _mask(cl.of_kind(L.AUNTIL, stack=s)) for s in range(1, n + 1)}
        self.cuntil_mask = {s: _mask(cl.of_kind(L.CUNTIL, stack=s)) for s in range(1, n + 1)}
        self.action_bits = {a: idx[L.action(a)] for a in (CALL, INTERNAL, RETURN)
                            if L.action(a) in cl}
        self.state_bit = {(f.name, f.stack): i for i, f in enumerate(items) if f.op == L.STATE}
        self.trackers: list[tuple[int, object]] = []
        for s, name in L.reg_constraints(formula):
            if name not in self.automata:
                raise ValueError(f"unknown automaton {name!r}")
            self.trackers.append((s, self.automata[name]))
        self.in_bits = [(idx[L.in_(s, name)], k)
                        for k, (s, name) in enumerate(L.reg_constraints(formula))]
        self.trackers_on = {s: [k for k, (s2, _) in enumerate(self.trackers) if s2 == s]
                            for s in range(1, n + 1)}
        self.until_ids = cl.of_kind(L.UNTIL)
        self.auntil_ids = cl.of_kind(L.AUNTIL)
        self._atom_cache: dict = {}
        self._succ_cache: dict = {}
        self.stats = {"successor_calls": 0, "atom_queries": 0}

    # ---------------------------------------------------------- interface
    def active_stack(self, state: AugState) -> int:
        return state.s

    def bottom(self, j: int) -> AugLetter:
        snap = tuple(frozenset(self.trackers[k][1].initial) for k in self.trackers_on[j])
        return AugLetter(BOT, 0, False, snap)

    def initial_regs(self) -> tuple[frozenset, ...]:
        return tuple(nfa.step(frozenset(nfa.initial), BOT) for _, nfa in self.trackers)

    def atoms_for(self, j: int, must: int, forbid: int) -> list[int]:
        key = (j, must, forbid)
        got = self._atom_cache.get(key)
        if got is None:
            self.stats["atom_queries"] += 1
            got = self._atom_cache[key] = list(stack_atoms(self.cl, j, must, forbid))
        return got

    def _reg_masks(self, regs: tuple) -> tuple[int, int]:
        must = forbid = 0
        for bit, k in self.in_bits:
            if self.trackers[k][1].accepting_in(regs[k]):
                must |= 1 << bit
            else:
                forbid |= 1 << bit
        return must, forbid

    def initial_states(self, g0, i0: int) -> list[AugState]:
        """All product states (g0, i0, ...) whose active atom contains the formula."""
        n = self.stack_count
        cl = self.cl
        regs = self.initial_regs()
        rm, rf = self._reg_masks(regs)
        must = cl.bit(self.formula) | (1 << self.state_bit[(g0, i0)]) | rm
        forbid = rf
        for j in range(1, n + 1):
            forbid |= self.cnext_mask[j]
            if j != i0:
                forbid |= self.cuntil_mask[j]
        out = []
        for b in self.atoms_for(i0, must, forbid):
            options = []
            for j in range(1, n + 1):
                if j == i0:
                    options.append([(b, True)])
                    continue
                ua = self.auntil_mask[j]
                opts = [(a, True) for a in self.atoms_for(j, b & ua, ua & ~b)]
                if not b & ua:
                    opts.append((0, False))
                options.append(opts)
            for combo in _product(*options):
                atoms = tuple(a for a, _ in combo)
                alive = tuple(d for _, d in combo)
                out.append(AugState(g0, i0, atoms, (False,) * n, alive, regs))
        return out

    def successors(self, state: AugState, top: AugLetter) -> list[tuple[int, AugState, Effect]]:
        key = (state, top)
        got = self._succ_cache.get(key)
        if got is None:
            got = self._succ_cache[key] = list(self._successors(state, top))
        return got

    # ---------------------------------------------------------- transitions
    def _successors(self, S: AugState, T: AugLetter) -> Iterator[tuple[int, AugState, Effect]]:
        self.stats["successor_calls"] += 1
        s = S.s
        n = self.stack_count
        B = S.atoms[s - 1]
        if not S.alive[s - 1] or not B:
            return
        if not B >> self.state_bit[(S.g, s)] & 1:
            return
        xa_s = self.anext_mask[s]
        for rule in self.system.rules_for((S.g, s), s, T.letter):
            act = rule.action
            if any(bool(B >> bit & 1) != (a == act) for a, bit in self.action_bits.items()):
                continue
            g2, s2 = rule.target
            # regularity trackers
            regs = list(S.regs)
            snap_old = tuple(S.regs[k] for k in self.trackers_on[s])
            for pos, k in enumerate(self.trackers_on[s]):
                nfa = self.trackers[k][1]
                if act == CALL:
                    regs[k] = nfa.step(S.regs[k], rule.letter)
                elif act == INTERNAL:
                    regs[k] = nfa.step(T.snap[pos], rule.letter)
                else:
                    regs[k] = T.snap[pos]
            regs = tuple(regs)
            # constraints on the next active atom B'
            must, forbid = self._reg_masks(regs)
            must |= 1 << self.state_bit[(g2, s2)]
            for ix, arg in self.next_pairs:
                if B >> ix & 1:
                    must |= 1 << arg
                else:
                    forbid |= 1 << arg
            for j in range(1, n + 1):
                for ix, arg in self.cnext_pairs[j]:
                    if j != s or act == INTERNAL:
                        src = B >> ix & 1
                    elif act == CALL:
                        src = B >> arg & 1
                    else:
                        src = T.atom >> ix & 1
                    if src:
                        must |= 1 << ix
                    else:
                        forbid |= 1 << ix
                keep = 0
                if j != s:
                    keep |= self.auntil_mask[j]
                if j != s2:
                    keep |= self.cuntil_mask[j]
                must |= B & keep
                forbid |= keep & ~B
            # abstract-next obligations that land on the next frame of stack s:
            # the current ones after an internal step, the popped caller's
            # after a return; a return itself has no abstract successor
            if act == RETURN and B & xa_s:
                continue
            land_must = land_forbid = 0
            if act != CALL:
                src = B if act == INTERNAL else T.atom
                for ix, arg in self.anext_pairs[s]:
                    if src >> ix & 1:
                        land_must |= 1 << arg
                    else:
                        land_forbid |= 1 << arg
            # return tags
            if act == CALL:
                ret_opts = [True] if S.rets[s - 1] else [False, True]
            elif act == INTERNAL:
                ret_opts = [S.rets[s - 1]]
            else:
                if not S.rets[s - 1]:
                    continue
                ret_opts = [T.ret]
            if act == CALL:
                effect = (CALL, AugLetter(rule.letter, B, S.rets[s - 1], snap_old))
            elif act == INTERNAL:
                effect = (INTERNAL, AugLetter(rule.letter, T.atom, T.ret, T.snap))
            else:
                effect = (RETURN, None)

            if s2 == s:
                bm, bf = must | land_must, forbid | land_forbid
                if bm & bf:
                    continue
                for r2 in ret_opts:
                    if act == CALL and not r2 and B & xa_s:
                        continue
                    rets = _put(S.rets, s, r2)
                    for b2 in self.atoms_for(s, bm, bf):
                        atoms = _put(S.atoms, s, b2)
                        yield rule.rid, AugState(g2, s2, atoms, rets, S.alive, regs), effect
                continue

            # switch: B' is the frozen atom of s2, and s gets a fresh frame
            if not S.alive[s2 - 1]:
                continue
            B2 = S.atoms[s2 - 1]
            if B2 & forbid or must & ~B2:
                continue
            ua_s = self.auntil_mask[s]
            for r2 in ret_opts:
                if act == CALL and not r2 and B & xa_s:
                    continue
                rets = _put(S.rets, s, r2)
                # stack s stays alive
                am = land_must | (B2 & ua_s)
                af = land_forbid | (ua_s & ~B2)
                if not am & af:
                    for a2 in self.atoms_for(s, am, af):
                        atoms = _put(S.atoms, s, a2)
                        yield rule.rid, AugState(g2, s2, atoms, rets, S.alive, regs), effect
                # stack s dies
                if r2 or B2 & ua_s or land_must:
                    continue
                if act == CALL and B & xa_s:
                    continue
                atoms = _put(S.atoms, s, 0)
                alive = _put(S.alive, s, False)
                yield rule.rid, AugState(g2, s2, atoms, rets, alive, regs), effect

    # ---------------------------------------------------------- acceptance
    def acceptance_family(self) -> list[tuple[str, Callable[[AugState], bool]]]:
        """Generalized Buchi sets: untils, abstract untils, activity, returns."""
        fam: list = []
        items = self.cl.items
        idx = self.cl.index
        for i in self.until_ids:
            f2 = idx[items[i].args[1]]
            fam.append((f"until:{items[i]}", _until_pred(i, f2)))
        for i in self.auntil_ids:
            f2 = idx[items[i].args[1]]
            fam.append((f"abstract-until:{items[i]}", _auntil_pred(i, f2, items[i].stack)))
        for j in range(1, self.stack_count + 1):
            fam.append((f"active:{j}", _active_pred(j)))
        for j in range(1, self.stack_count + 1):
            fam.append((f"noreturn:{j}", _noreturn_pred(j)))
        return fam

    def global_state_count(self) -> int:
        """|G_hat| * N over all atom/tag/tracker combinations."""
        n = self.stack_count
        total = len(self.system.base_states) * n
        for j in range(1, n + 1):
            nat = sum(1 for _ in stack_atoms(self.cl, j))
            total *= 2 * nat + 1     # alive atom with either tag, or dead
        for _, nfa in self.trackers:
            total *= 2 ** len(nfa.states)
        return total


def _until_pred(i: int, f2: int):
    def pred(S: AugState) -> bool:
        b = S.atoms[S.s - 1]
        return bool(b >> f2 & 1) or not b >> i & 1
    return pred


def _auntil_pred(i: int, f2: int, j: int):
    def pred(S: AugState) -> bool:
        if not S.alive[j - 1]:
            return True
        if S.s != j or S.rets[j - 1]:
            return False
        b = S.atoms[j - 1]
        return bool(b >> f2 & 1) or not b >> i & 1
    return pred


def _active_pred(j: int):
    def pred(S: AugState) -> bool:
        return S.s == j or not S.alive[j - 1]
    return pred


def _noreturn_pred(j: int):
    def pred(S: AugState) -> bool:
        return not S.alive[j - 1] or (S.s == j and not S.rets[j - 1])
    return pred


def _mask(ids) -> int:
    m = 0
    for i in ids:
        m |= 1 << i
    return m


def _put(t: tuple, s: int, v) -> tuple:
    return t[:s - 1] + (v,) + t[s:]


# --------------------------------------------------------------- augmentation

def _all_truths(ev: Evaluator, formulas: list[Formula]) -> dict:
    while True:
        copies = ev.copies
        out = {f: ev.truth(f) for f in formulas}
        if ev.copies == copies:
            return out


def augment(product: Product, lasso: LassoRun) -> LassoRun:
    """Annotate a run of the enhanced system with atoms, tags and frames.

    The result is a lasso of product configurations.  Its cycle is the last
    copy of the evaluator window, so its prefix may be longer than the input's.
    """
    n = product.stack_count
    cl = product.cl
    ev = Evaluator(lasso, product.automata, enhanced=True)
    truths = _all_truths(ev, cl.items)
    W = ev.window
    C = ev.C
    masks = [0] * W
    for i, f in enumerate(cl.items):
        vals = truths[f]
        for t in range(W):
            if vals[t]:
                masks[t] |= 1 << i

    def atom_at(t: int, j: int) -> int:
        u = ev.next_active(t, j, strict=False)
        return 0 if u is None else masks[ev.fold(u)]

    def willreturn(t: int, j: int) -> bool:
        h = ev.height(t, j)
        return any(ev.height(u, j) < h for u in range(t, ev._horizon(t) + 1))

    trackers = product.trackers

    def snap_of(j: int, word) -> tuple:
        return tuple(trackers[k][1].run(word) for k in product.trackers_on[j])

    def aug_config(t: int) -> Config:
        c = ev.config(t)
        g, s = c.state
        alive = tuple(ev.next_active(t, j, strict=False) is not None for j in range(1, n + 1))
        atoms = tuple(atom_at(t, j) for j in range(1, n + 1))
        rets = tuple(alive[j - 1] and willreturn(t, j) for j in range(1, n + 1))
        regs = tuple(nfa.run(c.stacks[s_i - 1]) for s_i, nfa in trackers)
        stacks = []
        for j in range(1, n + 1):
            w = c.stacks[j - 1]
            letters = [product.bottom(j)]
            for k in range(1, len(w)):
                tk = next(u for u in range(t, -1, -1) if ev.height(u, j) == k)
                letters.append(AugLetter(w[k], atom_at(tk, j), willreturn(tk, j),
                                         snap_of(j, w[:k])))
            stacks.append(tuple(letters))
        return Config(AugState(g, s, atoms, rets, alive, regs), tuple(stacks))

    configs = [aug_config(t) for t in range(W)]
    configs.append(configs[W - C])
    active = tuple(ev.active(t) for t in range(W))
    actions = tuple(ev.action(t) for t in range(W))
    rules = tuple(lasso.run.rules[lasso.index(t)] for t in range(W)) if lasso.run.rules else ()
    return LassoRun(RunPrefix(tuple(configs), active, actions, rules), W - C)


def project(lasso: LassoRun) -> LassoRun:
    """Forget the augmentation of a product lasso."""
    configs = tuple(Config((c.state.g, c.state.s),
                           tuple(tuple(x.letter for x in w) for w in c.stacks))
                    for c in lasso.run.configs)
    run = RunPrefix(configs, lasso.run.active, lasso.run.actions, lasso.run.rules)
    return LassoRun(run, lasso.loop)


def is_product_step(product: Product, c: Config, c2: Config, rid: int | None = None) -> bool:
    S = c.state
    top = c.stacks[S.s - 1][-1]
    for r, S2, eff in product.successors(S, top):
        if rid is not None and r != rid:
            continue
        if S2 == c2.state and apply_effect(c.stacks, S.s, eff) == c2.stacks:
            return True
    return False


def unrolled(lasso: LassoRun, length: int) -> list[Config]:
    return [lasso.run.configs[lasso.index(t)] for t in range(length)]
