"""Independent reference computations used only by the tests."""
from collections import deque

from mcaret import logic as L
from mcaret.mpds import BOT, CALL, INTERNAL, RETURN


def brute_atoms(cl, j=None):
    """Every subset of the closure satisfying the atom rules, by exhaustive filtering.

    Subsets are bit-sliced: ``col[i]`` is an integer whose bit m says whether
    subset m contains closure element i, so each rule is a handful of big-int
    operations over all 2^n subsets at once.
    """
    items = cl.items
    n = len(items)
    total = 1 << n
    full = (1 << total) - 1
    col = []
    for i in range(n):
        block = ((1 << (1 << i)) - 1) << (1 << i)      # bit i set within each 2^(i+1) run
        period = 1 << (i + 1)
        pattern = 0
        for start in range(0, total, period):
            pattern |= block << start
        col.append(pattern & full)
    idx = cl.index
    ok = full

    def iff(a, b):
        return ~(a ^ b) & full

    for f in items:
        c = col[idx[f]]
        if f.op == L.NOT:
            ok &= c ^ col[idx[f.args[0]]]
        elif f.op == L.OR:
            ok &= iff(c, col[idx[f.args[0]]] | col[idx[f.args[1]]])
        elif f.op == L.UNTIL:
            ok &= iff(c, col[idx[f.args[1]]] | (col[idx[f.args[0]]] & col[idx[L.nxt(f)]]))
    # exactly one state element
    states = [col[idx[f]] for f in items if f.op == L.STATE]
    seen_one, seen_two = 0, 0
    for c in states:
        seen_two |= seen_one & c
        seen_one |= c
    ok &= seen_one & ~seen_two & full
    if j is not None:
        for f in items:
            c = col[idx[f]]
            if f.op == L.STATE and f.stack != j:
                ok &= ~c & full
            elif f.op == L.STACK:
                ok &= c if f.stack == j else ~c & full
            elif f.op == L.ANEXT and f.stack != j:
                ok &= ~c & full
            elif f.op in (L.AUNTIL, L.CUNTIL) and f.stack == j:
                nxt = L.Formula(L.NEXT_OF[f.op], (f,), j)
                ok &= iff(c, col[idx[f.args[1]]] | (col[idx[f.args[0]]] & col[idx[nxt]]))
        acts = [col[idx[f]] for f in items if f.op == L.ACTION]
        one, two = 0, 0
        for c in acts:
            two |= one & c
            one |= c
        ok &= ~two & full
        if len(acts) == 3:
            ok &= one
    out = set()
    m = ok
    while m:
        low = m & -m
        out.add(low.bit_length() - 1)
        m ^= low
    return out


def pds_successors(rules, config):
    """One-step successors of (p, bottom-first word) under (p, a, p2, kind, b) rules."""
    p, w = config
    out = []
    for q, a, q2, kind, b in rules:
        if q != p or not w or w[-1] != a:
            continue
        if kind == CALL:
            out.append((q2, w + (b,)))
        elif kind == INTERNAL:
            out.append((q2, w[:-1] + (b,)))
        else:
            out.append((q2, w[:-1]))
    return out


def bfs(rules, start, height):
    """Configurations reachable from ``start`` without exceeding ``height``."""
    seen = {start}
    todo = deque([start])
    while todo:
        c = todo.popleft()
        for d in pds_successors(rules, c):
            if len(d[1]) <= height and d not in seen:
                seen.add(d)
                todo.append(d)
    return seen


def configs_up_to(states, letters, height):
    """All (p, word) with word = bot + letters, length between 1 and height."""
    words = [(BOT,)]
    frontier = [(BOT,)]
    for _ in range(height - 1):
        frontier = [w + (a,) for w in frontier for a in letters]
        words += frontier
    return [(p, w) for p in states for w in words]


__all__ = ["brute_atoms", "bfs", "configs_up_to", "pds_successors", "RETURN"]
