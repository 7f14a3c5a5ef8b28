"""Command line front end and file formats.

System files::

    stacks 2
    alphabet a b
    states g0 g1
    init g0 1
    enhanced                          # optional
    rule 1: g0 bot -> g1 [2] call(a)  # [s'] only in enhanced systems
    automaton A { states q0 q1; initial q0; accepting q1; trans q0 a q1; }

Formula files hold optional automaton blocks and one formula; ``#`` starts
a comment in both formats.

Exit codes: 0 yes, 1 no, 2 inconclusive, 3 solver and oracle disagree,
4 bad input or resource exhaustion.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

from . import logic as L
from .automata import Nfa
from .mpds import ACTIONS, BOT, EnhancedMpds, Mpds, MpdsError, Rule, enhance, make_enhanced
from .oracle import (DEFAULT_BUDGET, DEFAULT_HEIGHT, ResourceError, cross_check,
                     lasso_to_json, oracle_bmc)
from .solver import Verdict, bmc

EXIT = {"yes": 0, "no": 1, "inconclusive": 2}
EXIT_DISAGREE = 3
EXIT_ERROR = 4


class FormatError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = ""
        if line is not None:
            where = f"line {line}" + (f", col {col}" if col is not None else "") + ": "
        super().__init__(where + message)


# ------------------------------------------------------------- automata

_BLOCK = re.compile(r"automaton\s+([A-Za-z_][A-Za-z0-9_]*)\s*\{(.*?)\}", re.S)


def _line_col(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    return line, pos - (text.rfind("\n", 0, pos) + 1) + 1


def _strip_comments(text: str) -> str:
    return "\n".join(ln.split("#", 1)[0] for ln in text.split("\n"))


def extract_automata(text: str) -> tuple[dict, str]:
    """Parse and blank out automaton blocks; line numbers of the rest are kept."""
    text = _strip_comments(text)
    automata: dict = {}
    out = []
    last = 0
    for m in _BLOCK.finditer(text):
        name = m.group(1)
        line, col = _line_col(text, m.start())
        if name in automata:
            raise FormatError(f"automaton {name} defined twice", line, col)
        automata[name] = _parse_block(name, m.group(2), line, col)
        out.append(text[last:m.start()])
        out.append("\n" * m.group(0).count("\n"))
        last = m.end()
    out.append(text[last:])
    rest = "".join(out)
    stray = re.search(r"\bautomaton\b", rest)
    if stray:
        raise FormatError("malformed automaton block", *_line_col(rest, stray.start()))
    return automata, rest


def _parse_block(name: str, body: str, line: int, col: int) -> Nfa:
    states: list = []
    initial: list = []
    accepting: list = []
    trans: list = []
    for part in body.split(";"):
        words = part.split()
        if not words:
            continue
        key, args = words[0], words[1:]
        if key == "states":
            states += args
        elif key == "initial":
            initial += args
        elif key == "accepting":
            accepting += args
        elif key == "trans":
            if len(args) != 3:
                raise FormatError(f"automaton {name}: trans needs 'q a q2'", line, col)
            trans.append(tuple(args))
        else:
            raise FormatError(f"automaton {name}: unknown item {key!r}", line, col)
    try:
        return Nfa(name, tuple(states), frozenset(initial), frozenset(accepting), tuple(trans))
    except ValueError as e:
        raise FormatError(str(e), line, col) from None


def render_automaton(nfa: Nfa) -> str:
    parts = [f"states {' '.join(nfa.states)}",
             f"initial {' '.join(sorted(nfa.initial))}",
             f"accepting {' '.join(sorted(nfa.accepting))}"]
    parts += [f"trans {q} {a} {q2}" for q, a, q2 in nfa.transitions]
    return f"automaton {nfa.name} {{ " + "; ".join(parts) + "; }"


# --------------------------------------------------------------- systems

_RULE = re.compile(r"rule\s+(\d+)\s*:\s*(\S+)\s+(\S+)\s*->\s*(\S+?)\s*(?:\[\s*(\d+)\s*\])?\s*"
                   r"([a-z]+)\(\s*([^()\s]+)\s*\)\s*$")


@dataclass
class SystemFile:
    system: Mpds
    automata: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


def parse_system(text: str) -> SystemFile:
    automata, rest = extract_automata(text)
    header: dict = {}
    enhanced = False
    raw_rules: list = []
    warnings: list = []
    for no, line in enumerate(rest.split("\n"), 1):
        line = line.strip()
        if not line:
            continue
        word = line.split()[0]
        if word == "rule":
            m = _RULE.match(line)
            if not m:
                raise FormatError("expected 'rule s: g a -> g2 [s2] action(b)'", no, 1)
            raw_rules.append((no, m))
        elif word == "enhanced":
            if line != "enhanced":
                raise FormatError("'enhanced' takes no arguments", no, 1)
            enhanced = True
        elif word in ("stacks", "alphabet", "states", "init"):
            if word in header:
                raise FormatError(f"duplicate '{word}' line", no, 1)
            header[word] = (no, line.split()[1:])
        else:
            raise FormatError(f"unknown directive {word!r}", no, 1)
    for key in ("stacks", "states"):
        if key not in header:
            raise FormatError(f"missing '{key}' line")
    no, args = header["stacks"]
    if len(args) != 1 or not args[0].isdigit() or int(args[0]) < 1:
        raise FormatError("'stacks' needs a positive integer", no, 1)
    n = int(args[0])
    alphabet = tuple(a for a in header.get("alphabet", (0, []))[1] if a != BOT)
    states = tuple(header["states"][1])
    initial = None
    if "init" in header:
        no, args = header["init"]
        if len(args) != 2 or not args[1].isdigit():
            raise FormatError("'init' needs a state and a stack", no, 1)
        initial = (args[0], int(args[1]))
    rules = []
    seen: set = set()
    for no, m in raw_rules:
        s, g, a, g2, s2, act, b = m.groups()
        col = m.start(5) + 1 if s2 is not None else None
        if act not in ACTIONS:
            raise FormatError(f"unknown action {act!r}", no, m.start(6) + 1)
        if enhanced and s2 is None:
            raise FormatError("enhanced rules need a target stack [s2]", no, 1)
        if not enhanced and s2 is not None:
            raise FormatError("target stack [s2] only allowed in enhanced systems", no, col)
        s = int(s)
        if enhanced:
            r = Rule(s, (g, s), a, (g2, int(s2)), act, b)
        else:
            r = Rule(s, g, a, g2, act, b)
        if r in seen:
            warnings.append(f"line {no}: duplicate rule ignored")
            continue
        seen.add(r)
        try:
            if enhanced:
                make_enhanced(states, n, alphabet, [r])
            else:
                Mpds(states, n, alphabet, (r,))
        except MpdsError as e:
            raise FormatError(str(e), no, 1) from None
        rules.append(r)
    try:
        if enhanced:
            system = make_enhanced(states, n, alphabet, rules, initial)
        else:
            system = Mpds(states, n, alphabet, tuple(rules), initial)
    except MpdsError as e:
        raise FormatError(str(e)) from None
    return SystemFile(system, automata, warnings)


def render_system(system: Mpds, automata: Mapping | None = None) -> str:
    enhanced = system.enhanced
    states = system.base_states if enhanced else system.states
    lines = [f"stacks {system.stack_count}"]
    letters = [a for a in system.alphabet if a != BOT]
    if letters:
        lines.append("alphabet " + " ".join(letters))
    lines.append("states " + " ".join(states))
    if system.initial is not None:
        lines.append(f"init {system.initial[0]} {system.initial[1]}")
    if enhanced:
        lines.append("enhanced")
    for r in system.rules:
        if enhanced:
            lines.append(f"rule {r.stack}: {r.source[0]} {r.top} -> {r.target[0]} "
                         f"[{r.target[1]}] {r.action}({r.letter})")
        else:
            lines.append(f"rule {r.stack}: {r.source} {r.top} -> {r.target} {r.action}({r.letter})")
    for nfa in (automata or {}).values():
        lines.append(render_automaton(nfa))
    return "\n".join(lines) + "\n"


def parse_formula_text(text: str, stack_count: int, automata: Mapping | None = None,
                       states=None) -> tuple[L.Formula, dict]:
    """A formula, possibly preceded by automaton blocks."""
    extra, rest = extract_automata(text)
    known = dict(automata or {})
    known.update(extra)
    body = " ".join(rest.split())
    if not body:
        raise FormatError("no formula given")
    try:
        return L.parse_formula(body, stack_count, known, states), known
    except L.FormulaError as e:
        raise FormatError(f"formula: {e}") from None


# ------------------------------------------------------------------ jobs

@dataclass
class Job:
    mode: str
    system_path: str
    formula: str
    k: int
    height: int = DEFAULT_HEIGHT
    budget: int = DEFAULT_BUDGET
    json: bool = False
    jobs: int = 1


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def load(job: Job) -> tuple[EnhancedMpds, L.Formula, dict, list]:
    sf = parse_system(_read(job.system_path))
    system = sf.system
    if system.initial is None:
        raise FormatError("the system has no 'init' line")
    if not system.enhanced:
        system = enhance(system)
    ftext = job.formula
    if ftext == "-" or os.path.isfile(ftext):
        ftext = _read(ftext)
    formula, automata = parse_formula_text(ftext, system.stack_count, sf.automata,
                                           system.base_states)
    return system, formula, automata, sf.warnings


def run_job(job: Job) -> tuple[int, dict]:
    if job.k < 1:
        raise FormatError("the context bound k must be at least 1")
    system, formula, automata, warnings = load(job)
    g0, i0 = system.initial
    report: dict = {
        "mode": job.mode,
        "k": job.k,
        "formula": L.render(formula),
        "system": {"stacks": system.stack_count, "states": len(system.base_states),
                   "rules": len(system.rules)},
        "warnings": warnings,
        "verdict": None,
        "oracle": None,
        "agreement": None,
    }
    if job.mode == "check":
        v = bmc(system, g0, i0, formula, job.k, automata)
        report["verdict"] = v.to_json()
        report["result"] = v.answer
        return EXIT[v.answer], report
    if job.mode == "oracle":
        res = oracle_bmc(system, g0, i0, formula, job.k, automata, job.height, job.budget)
        report["oracle"] = _oracle_json(res)
        report["result"] = res.answer
        return EXIT[res.answer], report
    if job.jobs > 1:
        # solver and oracle are independent; run them side by side
        with ProcessPoolExecutor(2) as pool:
            fv = pool.submit(_solve, system, g0, i0, formula, job.k, automata)
            fo = pool.submit(oracle_bmc, system, g0, i0, formula, job.k, automata,
                             job.height, job.budget)
            v, res = fv.result(), fo.result()
        agreement = _agreement(v, res)
    else:
        agreement, v, res = cross_check(system, g0, i0, formula, job.k, None, automata,
                                        job.height, job.budget)
    report["verdict"] = v.to_json()
    report["oracle"] = _oracle_json(res)
    report["agreement"] = agreement
    report["result"] = v.answer
    if agreement == "disagree":
        return EXIT_DISAGREE, report
    if agreement == "inconclusive":
        return EXIT["inconclusive"], report
    return EXIT[v.answer], report


def _solve(system, g0, i0, formula, k, automata) -> Verdict:
    v = bmc(system, g0, i0, formula, k, automata)
    return Verdict(v.answer, v.witness, v.stats)


def _agreement(v: Verdict, res) -> str:
    if res.answer == "inconclusive":
        return "inconclusive"
    return "agree" if res.answer == v.answer else "disagree"


def _oracle_json(res) -> dict:
    return {"result": res.answer, "vertices": res.vertices, "truncated": res.truncated,
            "lasso": None if res.lasso is None else lasso_to_json(res.lasso)}


def summary(report: dict) -> str:
    lines = [f"result: {report['result']}  (k={report['k']}, formula {report['formula']})"]
    v = report.get("verdict")
    if v is not None:
        st = v["stats"]
        lines.append(f"solver: {v['result']}, {st['skeletons']} context skeletons, "
                     f"{st['saturations']} saturations, {st['wall_time']:.3f}s")
        w = v.get("witness")
        if w:
            path = " -> ".join(f"({g},{s})" for g, s in (e["state"] for e in w["skeleton"]))
            g, s, a = w["repeated_head"]
            lines.append(f"witness: contexts start at {path}; repeated head ({g},{s}) top {a}")
    o = report.get("oracle")
    if o is not None:
        lines.append(f"oracle: {o['result']}, {o['vertices']} vertices, "
                     f"{o['truncated']} truncated")
    if report.get("agreement"):
        lines.append(f"cross-check: {report['agreement']}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mcaret",
        description="Bounded model checking of multi-stack pushdown systems against "
                    "nested-word temporal formulas.  Runtime grows like |M|^(k+1) in "
                    "the context bound k.")
    sub = ap.add_subparsers(dest="mode", required=True)
    helps = {"check": "decide with the saturation-based solver",
             "oracle": "decide by explicit search with bounded stack heights",
             "cross-check": "run both and compare"}
    for mode, text in helps.items():
        p = sub.add_parser(mode, help=text)
        p.add_argument("-s", "--system", required=True, help="system file")
        p.add_argument("-f", "--formula", required=True,
                       help="formula text, a formula file, or - for stdin")
        p.add_argument("-k", type=int, required=True, help="context bound (at least 1)")
        p.add_argument("-H", "--height", type=int, default=DEFAULT_HEIGHT,
                       help="stack height cutoff for the oracle")
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                       help="vertex budget for the oracle")
        p.add_argument("--json", action="store_true", help="print a JSON report")
        p.add_argument("-j", "--jobs", type=int, default=os.cpu_count() or 1,
                       help="worker processes; cross-check runs solver and oracle "
                            "in parallel when this is above 1 (default: all cores)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    job = Job(args.mode, args.system, args.formula, args.k, args.height, args.budget, args.json,
              max(1, args.jobs))
    try:
        code, report = run_job(job)
    except (OSError, FormatError, ValueError, ResourceError) as e:
        print(f"mcaret: {e}", file=sys.stderr)
        return EXIT_ERROR
    for w in report["warnings"]:
        print(f"mcaret: warning: {w}", file=sys.stderr)
    if job.json:
        print(json.dumps(report, indent=2, default=str))
    else:
        print(summary(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
