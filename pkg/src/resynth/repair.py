"""Minimal repairs: bounded synthesis plus an operation-count chain.

Operations are counted per ``(source, target)`` pair for redirects and per
state for label changes.  The count is threaded through a chain of
``cost(t, n, c)`` variables ("at least c operations after slot (t, n)"),
with slot ``n < N`` standing for redirects from ``t`` to ``n`` and slot
``n = N`` for the label change of ``t``; ``cost(., ., k+1)`` is forbidden.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .automata import BuchiAutomaton, ucw_for
from .ltl import Formula
from .satcore import CnfBuilder, SatError, solve
from .synthesis import SynthesisVarMap, decode_model, encode_bounded_synthesis
from .system import TransitionSystem, diff, is_consistent, model_check

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CostVarMap:
    k: int
    trans: dict  # (t, t') -> var, absent when no letter can be redirected
    label: dict  # t -> var, absent when there are no outputs
    cost: dict  # (t, n, c) -> var


def encode_cost(original: TransitionSystem, k: int, synth: SynthesisVarMap, cnf: CnfBuilder) -> CostVarMap:
    if k < 0:
        raise ValueError("operation bound must be nonnegative")
    N = original.n
    if synth.n != N:
        raise ValueError("synthesis bound must equal the size of the original system")
    a = original.alphabet

    trans = {}
    for t in range(N):
        for t2 in range(N):
            lits = [synth.tau[t, i, t2] for i in range(1 << a.n_inputs) if original.tau[t][i] != t2]
            v = cnf.var(("trans", t, t2))
            trans[t, t2] = v
            cnf.add_or(v, lits)  # empty disjunction forces v false
    label = {}
    for t in range(N):
        lits = [
            -synth.out[o, t] if original.out[t] >> o & 1 else synth.out[o, t]
            for o in range(a.n_outputs)
        ]
        v = cnf.var(("label", t))
        label[t] = v
        cnf.add_or(v, lits)

    cost = {(t, n, c): cnf.var(("cost", t, n, c)) for t in range(N) for n in range(N + 1) for c in range(k + 2)}

    def previous(t: int, n: int, c: int) -> list[int]:
        # antecedent literal(s) for slot (t, n); empty at the very first slot
        if n > 0:
            return [-cost[t, n - 1, c]]
        if t > 0:
            return [-cost[t - 1, N, c]]
        return []

    for t in range(N):
        for n in range(N + 1):
            flag = trans[t, n] if n < N else label[t]
            if t == 0 and n == 0:
                cnf.add_clause([-flag, cost[0, 0, 1]])
                cnf.add_clause([flag, cost[0, 0, 0]])
            else:
                for c in range(k + 1):
                    cnf.add_clause(previous(t, n, c) + [-flag, cost[t, n, c + 1]])
                    cnf.add_clause(previous(t, n, c) + [flag, cost[t, n, c]])
            cnf.add_clause([-cost[t, n, k + 1]])
    return CostVarMap(k, trans, label, cost)


def _solve_repair(system: TransitionSystem, k: int, ucw: BuchiAutomaton, backend: str | None, force=None):
    cnf, vmap = encode_bounded_synthesis(ucw, system.n, system.alphabet)
    encode_cost(system, k, vmap, cnf)
    if force is not None:
        force(cnf, vmap)
    outcome = solve(cnf, backend)
    if not outcome:
        return None
    return decode_model(outcome, vmap)


def repair(
    system: TransitionSystem,
    formula: Formula,
    k: int,
    backend: str | None = None,
    ucw: BuchiAutomaton | None = None,
) -> frozenset | None:
    """A transformation of at most ``k`` operations making ``system`` a model, or None.

    ``system`` must already be extended to the state budget.
    """
    ucw = ucw or ucw_for(formula, system.alphabet)
    repaired = _solve_repair(system, k, ucw, backend)
    if repaired is None:
        return None
    xi = diff(system, repaired)
    if len(xi) > k or not is_consistent(xi):
        raise SatError(f"decoded repair has {len(xi)} operations for bound {k}")
    if not model_check(repaired, formula, ucw):
        raise SatError("decoded repair does not satisfy the specification")
    return xi


def force_target(target: TransitionSystem):
    """Callback for ``_solve_repair`` pinning the synthesized system to ``target``."""

    def apply(cnf: CnfBuilder, vmap: SynthesisVarMap) -> None:
        for t in range(target.n):
            for i, t2 in enumerate(target.tau[t]):
                cnf.add_clause([vmap.tau[t, i, t2]])
            for o in range(target.alphabet.n_outputs):
                v = vmap.out[o, t]
                cnf.add_clause([v if target.out[t] >> o & 1 else -v])

    return apply


def minimal_repair(
    system: TransitionSystem,
    formula: Formula,
    backend: str | None = None,
    ucw: BuchiAutomaton | None = None,
) -> frozenset | None:
    """Binary search for the least operation count, probing ``repair``.

    Mirrors the textbook search including the closing probe at ``left``;
    solver calls are memoized per bound.
    """
    ucw = ucw or ucw_for(formula, system.alphabet)
    memo: dict[int, frozenset | None] = {}

    def probe(k: int):
        if k not in memo:
            memo[k] = repair(system, formula, k, backend, ucw)
            log.info("repair bound %d: %s", k, "sat" if memo[k] is not None else "unsat")
        return memo[k]

    left, right = 0, system.n + system.n * system.n
    best = None
    while left < right:
        k = (left + right) // 2
        xi = probe(k)
        if xi is not None:
            right = k - 1
            best = xi
        else:
            left = k + 1
    final = probe(left)
    if final is not None:
        return final
    return best
