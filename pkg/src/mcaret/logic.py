"""Multi-CaRet syntax: formula trees, concrete syntax, derived operators.

Primitive operators are the ones the closure and product understand:

    state (g@s), stack(s), action (call/ret/int), in(s, A),
    not, or, X, U, Xa[s], Ua[s], Xc[s], Uc[s]

Derived operators ``Xs[s]``, unindexed ``Xa`` and unindexed ``Ua`` are
accepted by the parser and removed by :func:`rewrite_derived`.  Conjunction,
implication, ``true``, ``false``, ``F`` and ``G`` only exist in the concrete
syntax and are expanded while parsing.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping

STATE, STACK, ACTION, IN = "state", "stack", "action", "in"
NOT, OR, NEXT, UNTIL = "not", "or", "X", "U"
ANEXT, AUNTIL, CNEXT, CUNTIL = "Xa", "Ua", "Xc", "Uc"
SNEXT, ANEXT_ANY, AUNTIL_ANY = "Xs", "Xa*", "Ua*"

LEAVES = (STATE, STACK, ACTION, IN)
INDEXED = (ANEXT, AUNTIL, CNEXT, CUNTIL, SNEXT, STACK, STATE, IN)
BINARY = (OR, UNTIL, AUNTIL, CUNTIL, AUNTIL_ANY)
DERIVED = (SNEXT, ANEXT_ANY, AUNTIL_ANY)
NEXT_OF = {UNTIL: NEXT, AUNTIL: ANEXT, CUNTIL: CNEXT}

ACTION_NAMES = {"call": "call", "ret": "return", "int": "internal"}
ACTION_SYNTAX = {v: k for k, v in ACTION_NAMES.items()}


class FormulaError(ValueError):
    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        super().__init__(message if pos is None else f"{message} at position {pos}")


@dataclass(frozen=True)
class Formula:
    """A node of a formula tree.

    ``stack`` is the stack index of indexed operators and leaves, ``name`` the
    state name, action name or automaton name of a leaf.
    """

    op: str
    args: tuple["Formula", ...] = ()
    stack: int | None = None
    name: str | None = None

    def __str__(self) -> str:
        return render(self)

    @property
    def size(self) -> int:
        return 1 + sum(a.size for a in self.args)

    def subformulas(self) -> Iterable["Formula"]:
        yield self
        for a in self.args:
            yield from a.subformulas()


def state(g: str, s: int) -> Formula:
    return Formula(STATE, (), s, g)


def stack(s: int) -> Formula:
    return Formula(STACK, (), s)


def action(a: str) -> Formula:
    return Formula(ACTION, (), None, ACTION_NAMES.get(a, a))


def in_(s: int, name: str) -> Formula:
    return Formula(IN, (), s, name)


def neg(f: Formula) -> Formula:
    return Formula(NOT, (f,))


def disj(f: Formula, g: Formula) -> Formula:
    return Formula(OR, (f, g))


def conj(f: Formula, g: Formula) -> Formula:
    return neg(disj(neg(f), neg(g)))


def implies(f: Formula, g: Formula) -> Formula:
    return disj(neg(f), g)


def nxt(f: Formula) -> Formula:
    return Formula(NEXT, (f,))


def until(f: Formula, g: Formula) -> Formula:
    return Formula(UNTIL, (f, g))


def anext(s: int, f: Formula) -> Formula:
    return Formula(ANEXT, (f,), s)


def auntil(s: int, f: Formula, g: Formula) -> Formula:
    return Formula(AUNTIL, (f, g), s)


def cnext(s: int, f: Formula) -> Formula:
    return Formula(CNEXT, (f,), s)


def cuntil(s: int, f: Formula, g: Formula) -> Formula:
    return Formula(CUNTIL, (f, g), s)


def snext(s: int, f: Formula) -> Formula:
    return Formula(SNEXT, (f,), s)


def anext_any(f: Formula) -> Formula:
    return Formula(ANEXT_ANY, (f,))


def auntil_any(f: Formula, g: Formula) -> Formula:
    return Formula(AUNTIL_ANY, (f, g))


TRUE = disj(stack(1), neg(stack(1)))
FALSE = neg(TRUE)


def eventually(f: Formula) -> Formula:
    return until(TRUE, f)


def globally(f: Formula) -> Formula:
    return neg(eventually(neg(f)))


def negate(f: Formula) -> Formula:
    """Negation without creating double negations."""
    return f.args[0] if f.op == NOT else neg(f)


# ---------------------------------------------------------------- rendering

_UNARY_SYNTAX = {NEXT: "X", ANEXT_ANY: "Xa"}
_INDEXED_UNARY = {ANEXT: "Xa", CNEXT: "Xc", SNEXT: "Xs"}
_BINARY_SYNTAX = {OR: "|", UNTIL: "U", AUNTIL_ANY: "Ua"}
_INDEXED_BINARY = {AUNTIL: "Ua", CUNTIL: "Uc"}


def render(f: Formula) -> str:
    """Concrete syntax; fully parenthesised so that parsing gives back ``f``."""
    op = f.op
    if op == STATE:
        return f"{f.name}@{f.stack}"
    if op == STACK:
        return f"stack({f.stack})"
    if op == ACTION:
        return ACTION_SYNTAX[f.name]
    if op == IN:
        return f"in({f.stack}, {f.name})"
    if op == NOT:
        return "!" + render(f.args[0])
    if op in _UNARY_SYNTAX:
        return f"{_UNARY_SYNTAX[op]} {render(f.args[0])}"
    if op in _INDEXED_UNARY:
        return f"{_INDEXED_UNARY[op]}[{f.stack}] {render(f.args[0])}"
    if op in _BINARY_SYNTAX:
        return f"({render(f.args[0])} {_BINARY_SYNTAX[op]} {render(f.args[1])})"
    if op in _INDEXED_BINARY:
        return f"({render(f.args[0])} {_INDEXED_BINARY[op]}[{f.stack}] {render(f.args[1])})"
    raise FormulaError(f"unknown operator {op}")


# ------------------------------------------------------------------ parsing

_TOKEN = re.compile(r"\s*(?:(->)|([A-Za-z_][A-Za-z0-9_']*)|(\d+)|([!|&()@\[\],]))")


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise FormulaError(f"unexpected character {text[pos]!r}", pos)
        tok = m.group(m.lastindex)
        tokens.append((tok, m.start(m.lastindex)))
        pos = m.end()
    tokens.append(("", len(text)))
    return tokens


_PREFIX = {"!", "X", "F", "G", "Xa", "Xc", "Xs"}
_UNTILS = {"U", "Ua", "Uc"}


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self, ahead: int = 0) -> str:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)][0]

    def pos(self) -> int:
        return self.toks[self.i][1]

    def take(self, expected: str | None = None) -> str:
        tok, pos = self.toks[self.i]
        if expected is not None and tok != expected:
            raise FormulaError(f"expected {expected!r}, found {tok or 'end of input'!r}", pos)
        self.i += 1
        return tok

    def number(self) -> int:
        tok, pos = self.toks[self.i]
        if not tok.isdigit():
            raise FormulaError(f"expected a stack index, found {tok or 'end of input'!r}", pos)
        self.i += 1
        return int(tok)

    def index(self) -> int:
        self.take("[")
        n = self.number()
        self.take("]")
        return n

    def parse(self) -> Formula:
        f = self.implication()
        if self.peek() != "":
            raise FormulaError(f"unexpected {self.peek()!r}", self.pos())
        return f

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.peek() == "->":
            self.take()
            return implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.peek() == "|":
            self.take()
            left = disj(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.until()
        while self.peek() == "&":
            self.take()
            left = conj(left, self.until())
        return left

    def _is_keyword(self, words: set) -> bool:
        return self.peek() in words and self.peek(1) != "@"

    def until(self) -> Formula:
        left = self.unary()
        if self._is_keyword(_UNTILS):
            op = self.take()
            s = self.index() if op != "U" and self.peek() == "[" else None
            if op == "Uc" and s is None:
                raise FormulaError("Uc needs a stack index", self.pos())
            right = self.until()
            if op == "U":
                return until(left, right)
            if op == "Ua":
                return auntil_any(left, right) if s is None else auntil(s, left, right)
            return cuntil(s, left, right)
        return left

    def unary(self) -> Formula:
        if self.peek() == "!":
            self.take()
            return neg(self.unary())
        if self._is_keyword(_PREFIX):
            op = self.take()
            if op == "X":
                return nxt(self.unary())
            if op == "F":
                return eventually(self.unary())
            if op == "G":
                return globally(self.unary())
            if op == "Xa" and self.peek() != "[":
                return anext_any(self.unary())
            s = self.index()
            body = self.unary()
            return {"Xa": anext, "Xc": cnext, "Xs": snext}[op](s, body)
        return self.primary()

    def primary(self) -> Formula:
        tok, pos = self.toks[self.i]
        if tok == "(":
            self.take()
            f = self.implication()
            self.take(")")
            return f
        if tok == "":
            raise FormulaError("unexpected end of input", pos)
        if not re.match(r"[A-Za-z_]", tok):
            raise FormulaError(f"unexpected {tok!r}", pos)
        self.take()
        if self.peek() == "@":
            self.take()
            return state(tok, self.number())
        if tok in ("true", "false"):
            return TRUE if tok == "true" else FALSE
        if tok in ACTION_NAMES:
            return action(tok)
        if tok == "stack":
            self.take("(")
            s = self.number()
            self.take(")")
            return stack(s)
        if tok == "in":
            self.take("(")
            s = self.number()
            self.take(",")
            name_pos = self.pos()
            name = self.take()
            if not re.match(r"[A-Za-z_]", name or "0"):
                raise FormulaError("expected an automaton name", name_pos)
            self.take(")")
            return in_(s, name)
        raise FormulaError(f"unknown atom {tok!r} (states are written g@s)", pos)


def parse_formula(text: str, stack_count: int | None = None,
                  automata: Mapping | None = None,
                  states: Iterable[str] | None = None) -> Formula:
    f = _Parser(text).parse()
    validate(f, stack_count, automata, states)
    return f


def validate(f: Formula, stack_count: int | None = None,
             automata: Mapping | None = None,
             states: Iterable[str] | None = None) -> None:
    known = set(states) if states is not None else None
    for sub in f.subformulas():
        if sub.stack is not None:
            if sub.stack < 1 or (stack_count is not None and sub.stack > stack_count):
                raise FormulaError(f"stack index {sub.stack} out of range in {render(sub)}")
        if sub.op == IN and automata is not None and sub.name not in automata:
            raise FormulaError(f"unknown automaton {sub.name!r}")
        if sub.op == STATE and known is not None and sub.name not in known:
            raise FormulaError(f"unknown state {sub.name!r}")


# ---------------------------------------------------------- derived operators

def _big_and(parts: list[Formula]) -> Formula:
    out = parts[0]
    for p in parts[1:]:
        out = conj(out, p)
    return out


def rewrite_derived(f: Formula, stack_count: int) -> Formula:
    """Replace Xs[s], unindexed Xa and unindexed Ua by primitive operators."""
    args = tuple(rewrite_derived(a, stack_count) for a in f.args)
    if f.op == SNEXT:
        s = stack(f.stack)
        return until(neg(s), conj(s, args[0]))
    if f.op == ANEXT_ANY:
        return _big_and([implies(stack(s), anext(s, args[0]))
                         for s in range(1, stack_count + 1)])
    if f.op == AUNTIL_ANY:
        return _big_and([implies(stack(s), auntil(s, args[0], args[1]))
                         for s in range(1, stack_count + 1)])
    if args == f.args:
        return f
    return Formula(f.op, args, f.stack, f.name)


def is_primitive(f: Formula) -> bool:
    return all(sub.op not in DERIVED for sub in f.subformulas())


def reg_constraints(f: Formula) -> list[tuple[int, str]]:
    """Distinct (stack, automaton name) pairs of the in(.,.) leaves, in order."""
    seen: dict = {}
    for sub in f.subformulas():
        if sub.op == IN:
            seen.setdefault((sub.stack, sub.name), None)
    return list(seen)
