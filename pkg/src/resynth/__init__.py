"""Bounded synthesis, minimal repair and counterexample explanations for LTL."""

from .automata import BuchiAutomaton, accepts_lasso, build_run_graph, ltl_to_nba, ucw_for
from .bmc import encode_bmc, find_counterexample
from .explain import (
    Explanation,
    explanation,
    is_justification,
    is_minimal_justification,
    validate_explanation,
)
from .fixtures import fixture
from .ltl import AtomicAlphabet, LassoWord, eval_lasso, negate_nnf, nnf, parse_ltl, pretty
from .repair import encode_cost, minimal_repair, repair
from .satcore import CnfBuilder, SatOutcome, solve
from .synthesis import decode_model, encode_bounded_synthesis, synthesize
from .system import (
    LabelChange,
    Redirect,
    TransitionSystem,
    apply,
    apply_all,
    diff,
    extend_states,
    from_json,
    is_consistent,
    model_check,
    to_dot,
    to_json,
    trace_member,
)

__version__ = "0.1.0"

__all__ = [
    "BuchiAutomaton",
    "accepts_lasso",
    "build_run_graph",
    "ltl_to_nba",
    "ucw_for",
    "encode_bmc",
    "find_counterexample",
    "Explanation",
    "explanation",
    "is_justification",
    "is_minimal_justification",
    "validate_explanation",
    "fixture",
    "AtomicAlphabet",
    "LassoWord",
    "eval_lasso",
    "negate_nnf",
    "nnf",
    "parse_ltl",
    "pretty",
    "encode_cost",
    "minimal_repair",
    "repair",
    "CnfBuilder",
    "SatOutcome",
    "solve",
    "decode_model",
    "encode_bounded_synthesis",
    "synthesize",
    "LabelChange",
    "Redirect",
    "TransitionSystem",
    "apply",
    "apply_all",
    "diff",
    "extend_states",
    "from_json",
    "is_consistent",
    "model_check",
    "to_dot",
    "to_json",
    "trace_member",
]
