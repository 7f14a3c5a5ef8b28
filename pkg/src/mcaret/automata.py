"""Finite word automata over the stack alphabet (regularity constraints)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable


@dataclass(frozen=True)
class Nfa:
    """Nondeterministic automaton; words are read bottom-up, bottom letter first."""

    name: str
    states: tuple[str, ...]
    initial: frozenset
    accepting: frozenset
    transitions: tuple[tuple[str, str, str], ...]
    _delta: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        known = set(self.states)
        delta: dict = {}
        for q, a, q2 in self.transitions:
            if q not in known or q2 not in known:
                raise ValueError(f"automaton {self.name}: unknown state in {q} {a} {q2}")
            delta.setdefault((q, a), set()).add(q2)
        if not set(self.initial) <= known or not set(self.accepting) <= known:
            raise ValueError(f"automaton {self.name}: unknown initial or accepting state")
        object.__setattr__(self, "_delta", {k: frozenset(v) for k, v in delta.items()})

    def step(self, current: frozenset, letter: str) -> frozenset:
        out: set = set()
        for q in current:
            out |= self._delta.get((q, letter), frozenset())
        return frozenset(out)

    def run(self, word: Iterable[str]) -> frozenset:
        current = frozenset(self.initial)
        for a in word:
            current = self.step(current, a)
        return current

    def accepting_in(self, current: frozenset) -> bool:
        return not current.isdisjoint(self.accepting)

    def accepts(self, word: Iterable[str]) -> bool:
        return self.accepting_in(self.run(word))

    def is_deterministic(self) -> bool:
        return len(self.initial) <= 1 and all(len(v) <= 1 for v in self._delta.values())
