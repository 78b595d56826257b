"""CNF construction and SAT solving.

Two backends: a CDCL solver written here (watched literals, first-UIP
learning, VSIDS, Luby restarts, phase saving) and a client for any external
solver that reads DIMACS and prints ``s``/``v`` lines.
"""

from __future__ import annotations

import heapq
import os
import random
import subprocess
import tempfile
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence


class SatError(RuntimeError):
    pass


class CnfBuilder:
    def __init__(self) -> None:
        self.num_vars = 0
        self.clauses: list[list[int]] = []
        self.names: dict[Hashable, int] = {}

    def fresh_var(self, key: Hashable | None = None) -> int:
        if key is not None and key in self.names:
            raise KeyError(f"variable {key!r} already allocated")
        self.num_vars += 1
        if key is not None:
            self.names[key] = self.num_vars
        return self.num_vars

    def var(self, key: Hashable) -> int:
        """Variable registered under ``key``, allocated on first use."""
        v = self.names.get(key)
        if v is None:
            v = self.fresh_var(key)
        return v

    def add_clause(self, literals: Iterable[int]) -> None:
        lits = []
        seen = set()
        for lit in literals:
            if lit == 0 or abs(lit) > self.num_vars:
                raise ValueError(f"bad literal {lit}")
            if -lit in seen:
                return  # tautology
            if lit not in seen:
                seen.add(lit)
                lits.append(lit)
        self.clauses.append(lits)

    def add_exactly_one(self, variables: Sequence[int]) -> None:
        if not variables:
            raise ValueError("exactly-one over an empty list")
        self.add_clause(variables)
        self.add_at_most_one(variables)

    def add_at_most_one(self, variables: Sequence[int]) -> None:
        for a in range(len(variables)):
            for b in range(a + 1, len(variables)):
                self.add_clause([-variables[a], -variables[b]])

    def add_and(self, out: int, literals: Sequence[int]) -> None:
        """``out <-> AND(literals)``."""
        for lit in literals:
            self.add_clause([-out, lit])
        self.add_clause([out] + [-lit for lit in literals])

    def add_or(self, out: int, literals: Sequence[int]) -> None:
        """``out <-> OR(literals)``."""
        for lit in literals:
            self.add_clause([out, -lit])
        self.add_clause([-out] + list(literals))

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        lines.extend(" ".join(map(str, c)) + " 0" for c in self.clauses)
        return "\n".join(lines) + "\n"


@dataclass
class SatOutcome:
    sat: bool
    assignment: dict[int, bool] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.sat

    def value(self, lit: int) -> bool:
        v = self.assignment[abs(lit)]
        return v if lit > 0 else not v


def check_model(clauses: Iterable[Sequence[int]], assignment: dict[int, bool]) -> bool:
    return all(any(assignment[abs(l)] == (l > 0) for l in c) for c in clauses)


# When set, every Sat answer is checked against all stored clauses.
VERIFY_MODELS = bool(os.environ.get("RESYNTH_VERIFY_MODELS"))

# Seed for the internal solver's initial phases and activities; None keeps
# the deterministic defaults.
_seed: int | None = None


def set_seed(seed: int | None) -> None:
    global _seed
    _seed = seed


def solve(builder: CnfBuilder, backend: str | None = None) -> SatOutcome:
    """Solve ``builder``'s clauses.

    ``backend`` is ``"internal"``, a path to a DIMACS solver executable, or
    ``None`` to use ``$RESYNTH_SOLVER`` when set and the internal solver
    otherwise.
    """
    if backend is None:
        backend = os.environ.get("RESYNTH_SOLVER") or "internal"
    if backend == "internal":
        outcome = CdclSolver(builder.num_vars, builder.clauses, seed=_seed).solve()
    else:
        outcome = solve_external(builder, backend)
    if outcome.sat and VERIFY_MODELS and not check_model(builder.clauses, outcome.assignment):
        raise SatError("solver returned an assignment violating a clause")
    return outcome


def solve_external(builder: CnfBuilder, solver_path: str, timeout: float | None = None) -> SatOutcome:
    with tempfile.NamedTemporaryFile("w", suffix=".cnf", delete=False) as fh:
        fh.write(builder.to_dimacs())
        path = fh.name
    try:
        try:
            proc = subprocess.run([solver_path, path], capture_output=True, text=True, timeout=timeout)
        except OSError as exc:
            raise SatError(f"cannot run solver {solver_path!r}: {exc}") from exc
        return parse_solver_output(proc.stdout, builder.num_vars, proc.returncode)
    finally:
        os.unlink(path)


def parse_solver_output(text: str, num_vars: int, returncode: int | None = None) -> SatOutcome:
    status = None
    values: dict[int, bool] = {}
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("s "):
            word = line[2:].strip()
            if word == "SATISFIABLE":
                status = True
            elif word == "UNSATISFIABLE":
                status = False
            else:
                raise SatError(f"solver reported {word!r}")
        elif line.startswith("v "):
            for tok in line[2:].split():
                lit = int(tok)
                if lit != 0:
                    values[abs(lit)] = lit > 0
    if status is None:
        raise SatError(f"malformed solver output (exit code {returncode})")
    if not status:
        return SatOutcome(False)
    return SatOutcome(True, {v: values.get(v, False) for v in range(1, num_vars + 1)})


def _luby(i: int) -> int:
    # i-th element (1-based) of the Luby sequence 1 1 2 1 1 2 4 ...
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while (1 << k) - 1 != i:
        i -= (1 << (k - 1)) - 1
        k = 1
        while (1 << k) - 1 < i:
            k += 1
    return 1 << (k - 1)


class CdclSolver:
    """Conflict-driven clause learning over literals ``2*v`` / ``2*v+1``."""

    RESTART_BASE = 64
    VAR_DECAY = 0.95

    def __init__(self, num_vars: int, clauses: Iterable[Sequence[int]], seed: int | None = None):
        self.n = num_vars
        size = 2 * num_vars + 2
        self.value = [0] * size  # per literal: 1 true, -1 false, 0 unassigned
        self.level = [0] * (num_vars + 1)
        self.reason: list[list[int] | None] = [None] * (num_vars + 1)
        self.watches: list[list[list[int]]] = [[] for _ in range(size)]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.activity = [0.0] * (num_vars + 1)
        self.var_inc = 1.0
        self.phase = [False] * (num_vars + 1)
        if seed is not None:
            rng = random.Random(seed)
            self.phase = [rng.random() < 0.5 for _ in range(num_vars + 1)]
            self.activity = [rng.random() * 1e-3 for _ in range(num_vars + 1)]
        self.heap = [(-self.activity[v], v) for v in range(1, num_vars + 1)]
        heapq.heapify(self.heap)
        self.learnts: list[list[int]] = []
        self.ok = True
        self.conflicts = 0
        for c in clauses:
            if not self._add_input(c):
                self.ok = False
                break

    @staticmethod
    def _lit(d: int) -> int:
        return 2 * d if d > 0 else -2 * d + 1

    def _add_input(self, dimacs: Sequence[int]) -> bool:
        lits = sorted({self._lit(x) for x in dimacs})
        for a in lits:
            if a ^ 1 in lits:
                return True
        lits = [l for l in lits if self.value[l] != -1]
        if any(self.value[l] == 1 for l in lits):
            return True
        if not lits:
            return False
        if len(lits) == 1:
            self._enqueue(lits[0], None)
            return self._propagate() is None
        self.watches[lits[0] ^ 1].append(lits)
        self.watches[lits[1] ^ 1].append(lits)
        return True

    def _enqueue(self, lit: int, reason) -> None:
        self.value[lit] = 1
        self.value[lit ^ 1] = -1
        v = lit >> 1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _propagate(self):
        value = self.value
        watches = self.watches
        trail = self.trail
        while self.qhead < len(trail):
            p = trail[self.qhead]  # p became true; clauses watching ~p
            self.qhead += 1
            false_lit = p ^ 1
            ws = watches[p]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == false_lit:
                    c[0], c[1] = c[1], false_lit
                first = c[0]
                if value[first] == 1:
                    ws[j] = c
                    j += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if value[lk] != -1:
                        c[1], c[k] = lk, false_lit
                        watches[lk ^ 1].append(c)
                        break
                else:
                    ws[j] = c
                    j += 1
                    if value[first] == -1:
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        self.qhead = len(trail)
                        return c
                    self._enqueue(first, c)
            del ws[j:]
        return None

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(1, self.n + 1):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(1, self.n + 1) if self.value[2 * u] == 0]
            heapq.heapify(self.heap)
            return
        if self.value[2 * v] == 0:
            heapq.heappush(self.heap, (-self.activity[v], v))

    def _analyze(self, confl: list[int]) -> tuple[list[int], int]:
        seen = set()
        learnt = [0]
        counter = 0
        p = None
        idx = len(self.trail) - 1
        cur = len(self.trail_lim)
        level = self.level
        while True:
            for q in confl:
                if p is not None and q == p:
                    continue
                v = q >> 1
                if v not in seen and level[v] > 0:
                    seen.add(v)
                    self._bump(v)
                    if level[v] >= cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while (self.trail[idx] >> 1) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            counter -= 1
            if counter == 0:
                break
            confl = self.reason[p >> 1]
        learnt[0] = p ^ 1
        # drop literals implied by the rest of the clause
        if len(learnt) > 2:
            in_clause = {l >> 1 for l in learnt}
            kept = [learnt[0]]
            for l in learnt[1:]:
                r = self.reason[l >> 1]
                if r is None or any((q >> 1) not in in_clause and level[q >> 1] > 0 for q in r if q != l ^ 1):
                    kept.append(l)
            learnt = kept
        if len(learnt) == 1:
            back = 0
        else:
            best = max(range(1, len(learnt)), key=lambda k: level[learnt[k] >> 1])
            learnt[1], learnt[best] = learnt[best], learnt[1]
            back = level[learnt[1] >> 1]
        return learnt, back

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        value = self.value
        for lit in self.trail[start:]:
            v = lit >> 1
            value[lit] = 0
            value[lit ^ 1] = 0
            self.reason[v] = None
            self.phase[v] = not (lit & 1)
            heapq.heappush(self.heap, (-self.activity[v], v))
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def _decide(self) -> int | None:
        heap = self.heap
        value = self.value
        while heap:
            _, v = heapq.heappop(heap)
            if value[2 * v] == 0:
                return 2 * v if self.phase[v] else 2 * v + 1
        return None

    def _reduce_db(self) -> None:
        locked = set()
        for lit in self.trail:
            r = self.reason[lit >> 1]
            if r is not None:
                locked.add(id(r))
        self.learnts.sort(key=len)
        keep = len(self.learnts) // 2
        removed = []
        kept = []
        for k, c in enumerate(self.learnts):
            if k < keep or len(c) <= 2 or id(c) in locked:
                kept.append(c)
            else:
                removed.append(c)
        if not removed:
            return
        gone = {id(c) for c in removed}
        for lit in range(len(self.watches)):
            ws = self.watches[lit]
            if ws:
                self.watches[lit] = [c for c in ws if id(c) not in gone]
        self.learnts = kept

    def solve(self) -> SatOutcome:
        if not self.ok:
            return SatOutcome(False)
        if self._propagate() is not None:
            return SatOutcome(False)
        restart = 1
        budget = self.RESTART_BASE * _luby(restart)
        max_learnts = max(2000, self.n)
        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                if not self.trail_lim:
                    return SatOutcome(False)
                learnt, back = self._analyze(confl)
                self._cancel_until(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    self.watches[learnt[0] ^ 1].append(learnt)
                    self.watches[learnt[1] ^ 1].append(learnt)
                    self.learnts.append(learnt)
                    self._enqueue(learnt[0], learnt)
                self.var_inc /= self.VAR_DECAY
                budget -= 1
                continue
            if budget <= 0:
                restart += 1
                budget = self.RESTART_BASE * _luby(restart)
                self._cancel_until(0)
                if len(self.learnts) > max_learnts:
                    self._reduce_db()
                    max_learnts = int(max_learnts * 1.1)
                continue
            lit = self._decide()
            if lit is None:
                assignment = {v: self.value[2 * v] == 1 for v in range(1, self.n + 1)}
                return SatOutcome(True, assignment)
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, None)
