"""Bounded model checking for lasso-shaped counterexamples.

For unrolling length ``k`` the path visits states ``s_0 .. s_{k-1}`` and a
loop selector ``l_j`` (exactly one, ``0 <= j < k``) demands that the
successor of ``s_{k-1}`` equals ``s_j``.  States are binary vectors.  The
negated property is encoded over its NNF with one-directional implications;
Until obligations inside the loop are discharged by a second, non-wrapping
pass that must reach the eventuality before the end of the unrolling.
"""

from __future__ import annotations

from dataclasses import dataclass

from .automata import ucw_for
from .ltl import (
    And,
    Atom,
    FalseF,
    Formula,
    LassoWord,
    Next,
    Not,
    Or,
    Release,
    TrueF,
    Until,
    eval_lasso,
    negate_nnf,
    subformulas,
)
from .satcore import CnfBuilder, SatError, SatOutcome, solve
from .system import TransitionSystem, trace_member


@dataclass(frozen=True)
class BmcVarMap:
    k: int
    state_bits: dict  # (step, bit) -> var, steps 0..k
    at: dict  # (step, t) -> var meaning s_step = t
    loop_sel: dict  # j -> var
    prop: dict  # (step, name) -> var
    subf: dict  # (formula, step) -> var
    pending: dict  # (until formula, step) -> var of the second pass


def _bits(n: int) -> int:
    return max(1, (n - 1).bit_length())


def encode_bmc(system: TransitionSystem, formula: Formula, k: int) -> tuple[CnfBuilder, BmcVarMap]:
    """Clauses satisfiable iff a length-k lasso of ``system`` violates ``formula``."""
    if k < 1:
        raise ValueError("unrolling length must be at least 1")
    a = system.alphabet
    n = system.n
    width = _bits(n)
    cnf = CnfBuilder()

    bits = {(s, b): cnf.var(("bit", s, b)) for s in range(k + 1) for b in range(width)}
    at = {}
    for s in range(k + 1):
        pattern = [[bits[s, b] if t >> b & 1 else -bits[s, b] for b in range(width)] for t in range(n)]
        for t in range(n):
            at[s, t] = cnf.var(("at", s, t))
            cnf.add_and(at[s, t], pattern[t])
        for code in range(n, 1 << width):
            cnf.add_clause([-bits[s, b] if code >> b & 1 else bits[s, b] for b in range(width)])
    prop = {(s, p): cnf.var(("prop", s, p)) for s in range(k) for p in a.props}

    # phi_T: initial state, output labels, transitions
    cnf.add_clause([at[0, 0]])
    for s in range(k):
        for t in range(n):
            label = system.out[t]
            for o, name in enumerate(a.outputs):
                cnf.add_clause([-at[s, t], prop[s, name] if label >> o & 1 else -prop[s, name]])
            for i, t2 in enumerate(system.tau[t]):
                guard = [-prop[s, p] if i >> b & 1 else prop[s, p] for b, p in enumerate(a.inputs)]
                cnf.add_clause([-at[s, t]] + guard + [at[s + 1, t2]])

    # phi_loop
    loop_sel = {j: cnf.var(("loop", j)) for j in range(k)}
    cnf.add_exactly_one(list(loop_sel.values()))
    for j in range(k):
        for b in range(width):
            cnf.add_clause([-loop_sel[j], -bits[k, b], bits[j, b]])
            cnf.add_clause([-loop_sel[j], bits[k, b], -bits[j, b]])

    # [[not phi]]
    target = negate_nnf(formula)
    subf = {(f, s): cnf.var(("f", f, s)) for f in subformulas(target) for s in range(k)}
    pending = {}

    def successor(f: Formula, s: int, extra: list[int]) -> None:
        """Clauses ``extra or f@(s+1)``, wrapping to every loop start."""
        if s + 1 < k:
            cnf.add_clause(extra + [subf[f, s + 1]])
        else:
            for j in range(k):
                cnf.add_clause(extra + [-loop_sel[j], subf[f, j]])

    for f in subformulas(target):
        for s in range(k):
            v = subf[f, s]
            if isinstance(f, TrueF):
                continue
            if isinstance(f, FalseF):
                cnf.add_clause([-v])
            elif isinstance(f, Atom):
                cnf.add_clause([-v, prop[s, f.name]])
            elif isinstance(f, Not):
                cnf.add_clause([-v, -prop[s, f.operand.name]])
            elif isinstance(f, And):
                cnf.add_clause([-v, subf[f.left, s]])
                cnf.add_clause([-v, subf[f.right, s]])
            elif isinstance(f, Or):
                cnf.add_clause([-v, subf[f.left, s], subf[f.right, s]])
            elif isinstance(f, Next):
                successor(f.operand, s, [-v])
            elif isinstance(f, Release):
                cnf.add_clause([-v, subf[f.right, s]])
                successor(f, s, [-v, subf[f.left, s]])
            elif isinstance(f, Until):
                cnf.add_clause([-v, subf[f.right, s], subf[f.left, s]])
                if s + 1 < k:
                    cnf.add_clause([-v, subf[f.right, s], subf[f, s + 1]])
            else:
                raise TypeError(f"unexpected node {type(f).__name__} in NNF")
        if isinstance(f, Until):
            # second pass: pending(s) needs the eventuality at some s' in [s, k-1]
            for s in range(k):
                pending[f, s] = cnf.var(("pending", f, s))
            for s in range(k):
                p = pending[f, s]
                cnf.add_clause([-p, subf[f.right, s], subf[f.left, s]])
                if s + 1 < k:
                    cnf.add_clause([-p, subf[f.right, s], pending[f, s + 1]])
                else:
                    cnf.add_clause([-p, subf[f.right, s]])
            last = subf[f, k - 1]
            for j in range(k):
                cnf.add_clause([-last, -loop_sel[j], subf[f.right, k - 1], pending[f, j]])
    cnf.add_clause([subf[target, 0]])
    return cnf, BmcVarMap(k, bits, at, loop_sel, prop, subf, pending)


def decode_lasso(outcome: SatOutcome, vmap: BmcVarMap, system: TransitionSystem) -> LassoWord:
    a = system.alphabet
    (j,) = [j for j, v in vmap.loop_sel.items() if outcome.value(v)]
    letters = [frozenset(p for p in a.props if outcome.value(vmap.prop[s, p])) for s in range(vmap.k)]
    return LassoWord(letters[:j], letters[j:])


def default_kmax(system: TransitionSystem, formula: Formula) -> int:
    return system.n * ucw_for(formula, system.alphabet).n_states + 1


def find_counterexample(
    system: TransitionSystem,
    formula: Formula,
    k_max: int | None = None,
    backend: str | None = None,
) -> LassoWord | None:
    """Shortest-bound lasso trace of ``system`` violating ``formula``, or None up to ``k_max``."""
    if k_max is None:
        k_max = default_kmax(system, formula)
    for k in range(1, k_max + 1):
        cnf, vmap = encode_bmc(system, formula, k)
        outcome = solve(cnf, backend)
        if outcome:
            word = decode_lasso(outcome, vmap, system)
            if not trace_member(system, word) or eval_lasso(word, formula):
                raise SatError(f"bounded model checking produced an invalid counterexample {word}")
            return word
    return None
