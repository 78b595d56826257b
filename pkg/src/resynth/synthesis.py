"""SAT-based bounded synthesis over a universal co-Buchi automaton.

The system is encoded by ``tau(t, i, t')`` (exactly one target per state and
input) and ``out(o, t)``.  An annotation certifies that every run-graph
path visits rejecting states finitely often: ``reach(t, q)`` marks product
vertices that are reachable, and an order-encoded counter ``cnt(t, q, c)``
("the annotation at (t, q) is at least c") must grow on every rejecting
step.  Counters are only allocated for automaton SCCs that contain a
rejecting state and have a cycle, since only those can host a rejecting
product cycle.  Inside such an SCC the value never needs to exceed
``n * |rejecting states of the SCC|``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .automata import BuchiAutomaton, ucw_for
from .ltl import AtomicAlphabet, Formula
from .satcore import CnfBuilder, SatError, SatOutcome, solve
from .system import TransitionSystem


@dataclass(frozen=True)
class SynthesisVarMap:
    n: int
    alphabet: AtomicAlphabet
    tau: dict  # (t, i, t') -> var
    out: dict  # (o, t) -> var
    reach: dict  # (t, q) -> var
    count: dict  # (t, q, c) -> var, c in 1..bound[q]
    bound: dict  # q -> counter ceiling, only for counted states

    def tau_var(self, t: int, i: int, t2: int) -> int:
        return self.tau[t, i, t2]

    def out_var(self, o: int, t: int) -> int:
        return self.out[o, t]


def _counted_states(ucw: BuchiAutomaton, n: int) -> dict[int, tuple[frozenset[int], int]]:
    """q -> (its SCC, counter ceiling) for states in cyclic SCCs with a rejecting state."""
    result = {}
    for q, scc in ucw.sccs().items():
        cyclic = len(scc) > 1 or any(t == q for _, _, t in ucw.edges[q])
        rejecting = scc & ucw.rejecting
        if cyclic and rejecting:
            result[q] = (scc, n * len(rejecting))
    return result


def encode_bounded_synthesis(
    ucw: BuchiAutomaton, n: int, alphabet: AtomicAlphabet | None = None, builder: CnfBuilder | None = None
) -> tuple[CnfBuilder, SynthesisVarMap]:
    if n < 1:
        raise ValueError("the state bound must be at least 1")
    alphabet = alphabet or ucw.alphabet
    if alphabet != ucw.alphabet:
        raise ValueError("automaton and alphabet disagree")
    cnf = builder if builder is not None else CnfBuilder()
    n_in = 1 << alphabet.n_inputs
    n_o = alphabet.n_outputs
    in_bits = (1 << alphabet.n_inputs) - 1
    m = ucw.n_states

    tau = {(t, i, t2): cnf.var(("tau", t, i, t2)) for t in range(n) for i in range(n_in) for t2 in range(n)}
    out = {(o, t): cnf.var(("out", o, t)) for o in range(n_o) for t in range(n)}
    reach = {(t, q): cnf.var(("reach", t, q)) for t in range(n) for q in range(m)}
    counted = _counted_states(ucw, n)
    count = {}
    for q, (_, ceiling) in counted.items():
        for t in range(n):
            for c in range(1, ceiling + 1):
                count[t, q, c] = cnf.var(("cnt", t, q, c))
                if c > 1:
                    cnf.add_clause([-count[t, q, c], count[t, q, c - 1]])
    vmap = SynthesisVarMap(n, alphabet, tau, out, reach, count, {q: b for q, (_, b) in counted.items()})

    for t in range(n):
        for i in range(n_in):
            cnf.add_exactly_one([tau[t, i, t2] for t2 in range(n)])
    cnf.add_clause([reach[0, ucw.initial]])

    for q in range(m):
        if q in ucw.rejecting and ucw.has_self_loop_on_all(q):
            # every continuation revisits q forever
            for t in range(n):
                cnf.add_clause([-reach[t, q]])

    for q in range(m):
        for care, value, q2 in ucw.edges[q]:
            in_care, in_value = care & in_bits, value & in_bits
            out_care, out_value = care >> alphabet.n_inputs, value >> alphabet.n_inputs
            same_scc = q in counted and q2 in counted and counted[q][0] is counted[q2][0]
            step = 1 if q2 in ucw.rejecting else 0
            for t in range(n):
                guard = [-reach[t, q]]
                for o in range(n_o):
                    if out_care >> o & 1:
                        guard.append(-out[o, t] if out_value >> o & 1 else out[o, t])
                for i in range(n_in):
                    if i & in_care != in_value:
                        continue
                    for t2 in range(n):
                        pre = guard + [-tau[t, i, t2]]
                        cnf.add_clause(pre + [reach[t2, q2]])
                        if not same_scc:
                            continue
                        ceiling = counted[q][1]
                        if step:
                            cnf.add_clause(pre + [count[t2, q2, 1]])
                        for c in range(1, ceiling + 1):
                            if c + step <= ceiling:
                                cnf.add_clause(pre + [-count[t, q, c], count[t2, q2, c + step]])
                            else:
                                cnf.add_clause(pre + [-count[t, q, c]])
    return cnf, vmap


def decode_model(outcome: SatOutcome, vmap: SynthesisVarMap) -> TransitionSystem:
    """Read the system off a satisfying assignment."""
    a = vmap.alphabet
    tau = []
    for t in range(vmap.n):
        row = []
        for i in range(1 << a.n_inputs):
            targets = [t2 for t2 in range(vmap.n) if outcome.value(vmap.tau[t, i, t2])]
            if len(targets) != 1:
                raise SatError(f"model does not fix a unique successor for state {t}, input {i}")
            row.append(targets[0])
        tau.append(tuple(row))
    out = tuple(
        sum(1 << o for o in range(a.n_outputs) if outcome.value(vmap.out[o, t])) for t in range(vmap.n)
    )
    return TransitionSystem(a, tuple(tau), out)


def synthesize(
    formula: Formula,
    n: int,
    alphabet: AtomicAlphabet,
    backend: str | None = None,
    ucw: BuchiAutomaton | None = None,
) -> TransitionSystem | None:
    """An n-state system satisfying ``formula``, or None when none exists."""
    ucw = ucw or ucw_for(formula, alphabet)
    cnf, vmap = encode_bounded_synthesis(ucw, n, alphabet)
    outcome = solve(cnf, backend)
    if not outcome:
        return None
    return decode_model(outcome, vmap)
