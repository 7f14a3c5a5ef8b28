"""Bounded model checking of multi-stack pushdown systems."""
from .logic import Formula, parse_formula, render
from .mpds import EnhancedMpds, Mpds, Rule, enhance, make_enhanced
from .oracle import cross_check, oracle_bmc
from .solver import Verdict, bmc, brep_single

__all__ = ["Formula", "parse_formula", "render", "Mpds", "EnhancedMpds", "Rule", "enhance",
           "make_enhanced", "bmc", "brep_single", "Verdict", "oracle_bmc", "cross_check"]
