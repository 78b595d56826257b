"""LTL to Buchi automata, lasso acceptance, and run graphs.

``ltl_to_nba`` is a tableau construction: each node is a consistent cover of
its obligations (literals for the current letter, formulas for the next one).
Nodes carry one acceptance flag per Until subformula; the resulting
generalized automaton is degeneralized with a counter, pruned to states that
can reach an accepting cycle, and quotiented by bisimulation.

Edges are guarded by cubes ``(care, value)`` over the alphabet's bits: a
letter ``x`` enables the edge iff ``x & care == value``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import networkx as nx

from .ltl import (
    And,
    Atom,
    AtomicAlphabet,
    FalseF,
    Formula,
    LassoWord,
    Next,
    Not,
    Or,
    PositionSpace,
    Release,
    TrueF,
    Until,
    disjuncts,
    negate_nnf,
    nnf,
    subformulas,
)

DEFAULT_STATE_CAP = 10_000
DENSE_LIMIT = 12


class AutomatonSizeError(RuntimeError):
    pass


Edge = tuple[int, int, int]  # (care, value, target)


@dataclass(frozen=True)
class BuchiAutomaton:
    """State-based Buchi automaton.  Used as a UCW by reading ``accepting`` as rejecting."""

    alphabet: AtomicAlphabet
    edges: tuple[tuple[Edge, ...], ...]
    initial: int
    accepting: frozenset[int]

    def __post_init__(self):
        m = len(self.edges)
        if not 0 <= self.initial < m:
            raise ValueError("initial state out of range")
        full = (1 << len(self.alphabet.props)) - 1
        for es in self.edges:
            for care, value, target in es:
                if not 0 <= target < m or care & ~full or value & ~care:
                    raise ValueError("malformed edge")
        if any(not 0 <= q < m for q in self.accepting):
            raise ValueError("accepting state out of range")

    @property
    def n_states(self) -> int:
        return len(self.edges)

    @property
    def rejecting(self) -> frozenset[int]:
        return self.accepting

    def successors(self, q: int, letter: int) -> frozenset[int]:
        return frozenset(t for care, value, t in self.edges[q] if letter & care == value)

    def transition_table(self) -> list[list[frozenset[int]]]:
        """Dense ``[state][letter] -> successors``; only for small alphabets."""
        n_letters = 1 << len(self.alphabet.props)
        if len(self.alphabet.props) > DENSE_LIMIT:
            raise AutomatonSizeError("alphabet too large for a dense table")
        return [[self.successors(q, x) for x in range(n_letters)] for q in range(self.n_states)]

    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.n_states))
        g.add_edges_from((q, t) for q, es in enumerate(self.edges) for _, _, t in es)
        return g

    def sccs(self) -> dict[int, frozenset[int]]:
        """State -> its strongly connected component."""
        comp = {}
        for scc in nx.strongly_connected_components(self.graph()):
            fs = frozenset(scc)
            for q in fs:
                comp[q] = fs
        return comp

    def has_self_loop_on_all(self, q: int) -> bool:
        return any(care == 0 and t == q for care, _, t in self.edges[q])


# --- tableau ----------------------------------------------------------------


@dataclass(frozen=True)
class _Cover:
    literals: frozenset[Formula]
    nexts: frozenset[Formula]
    old: frozenset[Formula]


@lru_cache(maxsize=200_000)
def _covers(formulas: frozenset[Formula]) -> tuple[_Cover, ...]:
    results = []
    stack = [(list(formulas), frozenset(), frozenset(), frozenset())]
    while stack:
        todo, lits, nexts, old = stack.pop()
        dead = False
        while todo:
            f = todo.pop()
            if f in old:
                continue
            old = old | {f}
            if isinstance(f, TrueF):
                continue
            if isinstance(f, FalseF):
                dead = True
                break
            if isinstance(f, Atom):
                if Not(f) in lits:
                    dead = True
                    break
                lits = lits | {f}
            elif isinstance(f, Not):
                if f.operand in lits:
                    dead = True
                    break
                lits = lits | {f}
            elif isinstance(f, And):
                todo += [f.left, f.right]
            elif isinstance(f, Next):
                nexts = nexts | {f.operand}
            elif isinstance(f, Or):
                stack.append((todo + [f.right], lits, nexts, old))
                todo.append(f.left)
            elif isinstance(f, Until):
                stack.append((todo + [f.left], lits, nexts | {f}, old))
                todo.append(f.right)
            elif isinstance(f, Release):
                stack.append((todo + [f.right], lits, nexts | {f}, old))
                todo += [f.left, f.right]
            else:
                raise TypeError(f"formula not in NNF: {f}")
        if not dead:
            results.append(_Cover(lits, nexts, old))
    return tuple(results)


def _cube(alphabet: AtomicAlphabet, literals: Iterable[Formula]) -> tuple[int, int]:
    care = value = 0
    for lit in literals:
        if isinstance(lit, Atom):
            b = alphabet.bit(lit.name)
            care |= b
            value |= b
        else:
            care |= alphabet.bit(lit.operand.name)
    return care, value


def _check_nnf(f: Formula) -> None:
    for g in subformulas(f):
        if isinstance(g, Not) and not isinstance(g.operand, Atom):
            raise ValueError("formula is not in negation normal form")
        if not isinstance(g, (TrueF, FalseF, Atom, Not, And, Or, Next, Until, Release)):
            raise ValueError("formula is not in negation normal form")


def ltl_to_nba(
    formula: Formula, alphabet: AtomicAlphabet, cap: int = DEFAULT_STATE_CAP
) -> BuchiAutomaton:
    """Buchi automaton accepting exactly the models of ``formula``.

    The formula is brought into NNF first (a no-op for NNF input).  A
    top-level disjunction is translated disjunct by disjunct and joined by
    union, which keeps the degeneralization counters local to each disjunct.
    """
    formula = nnf(formula)
    _check_nnf(formula)
    parts = list(dict.fromkeys(disjuncts(formula)))
    if len(parts) == 1:
        return _minimize(_translate(formula, alphabet, cap))
    autos = [_minimize(_translate(p, alphabet, cap)) for p in parts]
    return _minimize(_union(autos, alphabet), cap)


def ucw_for(formula: Formula, alphabet: AtomicAlphabet, cap: int = DEFAULT_STATE_CAP) -> BuchiAutomaton:
    """Universal co-Buchi automaton for ``formula``: the NBA of its negation."""
    return ltl_to_nba(negate_nnf(formula), alphabet, cap)


def _translate(formula: Formula, alphabet: AtomicAlphabet, cap: int) -> BuchiAutomaton:
    untils = [g for g in subformulas(formula) if isinstance(g, Until)]
    k = len(untils)

    def key(c: _Cover):
        flags = frozenset(j for j, u in enumerate(untils) if u not in c.old or u.right in c.old)
        return (c.literals, c.nexts, flags)

    def covers(fs: frozenset) -> list:
        out = {}
        for c in _covers(fs):
            out.setdefault(key(c), None)
        return _drop_subsumed(list(out))

    # generalized automaton; node 0 is the pre-initial node with no label
    nodes: list = [None]
    index: dict = {}
    succ: list[list[int]] = []
    succ.append([])
    pending = [(0, frozenset([formula]))]
    while pending:
        src, obligations = pending.pop()
        for node in covers(obligations):
            if node not in index:
                index[node] = len(nodes)
                nodes.append(node)
                succ.append([])
                if len(nodes) * max(k, 1) > cap:
                    raise AutomatonSizeError(f"tableau exceeds {cap} states")
                pending.append((index[node], node[1]))
            succ[src].append(index[node])

    # degeneralize: counter level c in 0..k, accepting when the level reaches k
    def advance(level: int, node_id: int) -> int:
        if k == 0:
            return 0
        flags = nodes[node_id][2] if node_id else frozenset()
        if level == k:
            level = 0
        while level < k and level in flags:
            level += 1
        return level

    states = {(0, 0): 0}
    order = [(0, 0)]
    edges: list[list[Edge]] = [[]]
    i = 0
    while i < len(order):
        node_id, level = order[i]
        for t in succ[node_id]:
            nxt = (t, advance(level, t))
            if nxt not in states:
                states[nxt] = len(order)
                order.append(nxt)
                edges.append([])
                if len(order) > cap:
                    raise AutomatonSizeError(f"automaton exceeds {cap} states")
            care, value = _cube(alphabet, nodes[t][0])
            edges[i].append((care, value, states[nxt]))
        i += 1
    if k == 0:
        accepting = frozenset(range(1, len(order)))
    else:
        accepting = frozenset(s for (nid, lvl), s in states.items() if lvl == k)
    return BuchiAutomaton(alphabet, tuple(tuple(es) for es in edges), 0, accepting)


def _drop_subsumed(nodes: list) -> list:
    # a node whose literals are a superset of another's, with equal obligations
    # and no more acceptance flags, accepts no additional runs
    kept = []
    for n in nodes:
        if any(m is not n and m[1] == n[1] and m[0] <= n[0] and m[2] >= n[2] and (m[0] < n[0] or m[2] > n[2])
               for m in nodes):
            continue
        kept.append(n)
    return kept


def _union(autos: Sequence[BuchiAutomaton], alphabet: AtomicAlphabet) -> BuchiAutomaton:
    edges: list[tuple[Edge, ...]] = [()]
    accepting: set[int] = set()
    init_edges: list[Edge] = []
    for a in autos:
        off = len(edges)
        for es in a.edges:
            edges.append(tuple((c, v, t + off) for c, v, t in es))
        accepting |= {q + off for q in a.accepting}
        # the fresh initial state is visited once; copying the components'
        # initial edges preserves every run
        init_edges += [(c, v, t + off) for c, v, t in a.edges[a.initial]]
    edges[0] = tuple(init_edges)
    return BuchiAutomaton(alphabet, tuple(edges), 0, frozenset(accepting))


def _merge_cubes(cubes: set[tuple[int, int]]) -> list[tuple[int, int]]:
    cubes = set(cubes)
    changed = True
    while changed:
        changed = False
        for a in list(cubes):
            for b in list(cubes):
                if a == b or a not in cubes or b not in cubes:
                    continue
                # b subsumed by a
                if b[0] & a[0] == a[0] and b[1] & a[0] == a[1]:
                    cubes.discard(b)
                    changed = True
                    continue
                # a and b differ in exactly one cared bit
                if a[0] == b[0]:
                    diff = a[1] ^ b[1]
                    if diff and diff & (diff - 1) == 0:
                        cubes.discard(a)
                        cubes.discard(b)
                        cubes.add((a[0] & ~diff, a[1] & ~diff))
                        changed = True
    return sorted(cubes)


def _minimize(a: BuchiAutomaton, cap: int = DEFAULT_STATE_CAP) -> BuchiAutomaton:
    """Prune useless states and merge bisimilar ones."""
    g = a.graph()
    reach = nx.descendants(g, a.initial) | {a.initial}
    g = g.subgraph(reach)
    good_sccs = set()
    for scc in nx.strongly_connected_components(g):
        nontrivial = len(scc) > 1 or any(g.has_edge(q, q) for q in scc)
        if nontrivial and scc & a.accepting:
            good_sccs |= scc
    useful = set(good_sccs)
    for q in good_sccs:
        useful |= nx.ancestors(g, q)
    useful &= reach
    keep = sorted(useful | {a.initial})
    edges = {q: [(c, v, t) for c, v, t in a.edges[q] if t in useful] for q in keep}
    acc = {q for q in keep if q in a.accepting}

    # acceptance of a state on no cycle is irrelevant; pick whichever flag merges more
    sub = g.subgraph(keep)
    transient = {
        q for scc in nx.strongly_connected_components(sub) if len(scc) == 1
        for q in scc if not sub.has_edge(q, q)
    }
    candidates = [_bisimulation(a, keep, edges, acc | transient), _bisimulation(a, keep, edges, acc - transient)]
    block, acc = min(candidates, key=lambda pair: (len(set(pair[0].values())), len(pair[1])))

    # renumber with the initial state first, the rest in discovery order
    order = [block[a.initial]]
    for q in keep:
        if block[q] not in order:
            order.append(block[q])
    renum = {b: i for i, b in enumerate(order)}
    rep = {}
    for q in keep:
        rep.setdefault(block[q], q)
    new_edges = []
    for b in order:
        q = rep[b]
        by_target: dict[int, set] = {}
        for c, v, t in edges[q]:
            by_target.setdefault(renum[block[t]], set()).add((c, v))
        es = []
        for t in sorted(by_target):
            es += [(c, v, t) for c, v in _merge_cubes(by_target[t])]
        new_edges.append(tuple(es))
    accepting = frozenset(renum[block[q]] for q in acc)
    if len(new_edges) > cap:
        raise AutomatonSizeError(f"automaton exceeds {cap} states")
    return BuchiAutomaton(a.alphabet, tuple(new_edges), 0, accepting)


def _bisimulation(a: BuchiAutomaton, keep: list[int], edges: dict, acc: set[int]):
    """Coarsest partition of ``keep`` respecting ``acc`` and the edge structure."""
    n_props = len(a.alphabet.props)
    dense = n_props <= 10
    letters = range(1 << n_props) if dense else ()
    block = {q: int(q in acc) for q in keep}
    while True:
        sigs = {}
        for q in keep:
            if dense:
                sig = tuple(
                    frozenset(block[t] for c, v, t in edges[q] if x & c == v) for x in letters
                )
            else:
                sig = frozenset((c, v, block[t]) for c, v, t in edges[q])
            sigs[q] = (block[q], sig)
        ids: dict = {}
        new_block = {q: ids.setdefault(sigs[q], len(ids)) for q in keep}
        if len(ids) == len(set(block.values())):
            return new_block, acc
        block = new_block


# --- lasso acceptance ---------------------------------------------------------


def accepts_lasso(a: BuchiAutomaton, word: LassoWord) -> bool:
    return accepts_lassos(a, [word])[0]


def accepts_lassos(a: BuchiAutomaton, words: Sequence[LassoWord] | PositionSpace) -> list[bool]:
    """Acceptance of each lasso, decided on the product with the lassos' position graphs.

    Product nodes ``(q, p)`` are kept as one position bitset per state.  The
    nodes with a run visiting accepting states infinitely often form the
    greatest fixpoint Z = pre+(Z & Acc); a lasso is accepted iff its start
    position paired with the initial state lies in Z.
    """
    space = words if isinstance(words, PositionSpace) else PositionSpace(words)
    props = a.alphabet.props
    m = a.n_states
    bits = [space.atom(p) for p in props]
    full = space.full

    def cube_positions(care: int, value: int) -> int:
        r = full
        for k in range(len(props)):
            if care >> k & 1:
                r &= bits[k] if value >> k & 1 else ~bits[k]
        return r & full

    # enabled[q] = [(target, positions)]
    enabled: list[list[tuple[int, int]]] = []
    for q in range(m):
        acc: dict[int, int] = {}
        for care, value, t in a.edges[q]:
            acc[t] = acc.get(t, 0) | cube_positions(care, value)
        enabled.append([(t, ps) for t, ps in acc.items() if ps])

    def pre(x: list[int]) -> list[int]:
        pulled = [space.pull(v) if v else 0 for v in x]
        out = []
        for q in range(m):
            r = 0
            for t, ps in enabled[q]:
                if pulled[t]:
                    r |= ps & pulled[t]
            out.append(r)
        return out

    z = [full] * m
    while True:
        target = [z[q] if q in a.accepting else 0 for q in range(m)]
        # y = nodes with a path of length >= 1 into target
        y = pre(target)
        while True:
            step = pre(y)
            new = [y[q] | step[q] for q in range(m)]
            if new == y:
                break
            y = new
        if y == z:
            break
        z = [z[q] & y[q] for q in range(m)]
    return space.at_starts(z[a.initial])


# --- run graphs ---------------------------------------------------------------


@dataclass(frozen=True)
class RunGraph:
    root: tuple[int, int]
    vertices: tuple[tuple[int, int], ...]
    edges: dict  # vertex -> tuple of (input index, successor vertex)
    rejecting: frozenset[tuple[int, int]]

    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.vertices)
        for v, es in self.edges.items():
            g.add_edges_from((v, w) for _, w in es)
        return g

    def rejecting_cycle_vertex(self) -> tuple[int, int] | None:
        """A rejecting vertex on a reachable cycle, or None."""
        g = self.graph()
        order = {v: k for k, v in enumerate(self.vertices)}
        for scc in sorted(nx.strongly_connected_components(g), key=lambda s: min(order[v] for v in s)):
            if len(scc) == 1:
                (v,) = scc
                if not g.has_edge(v, v):
                    continue
            bad = sorted((v for v in scc if v in self.rejecting), key=order.get)
            if bad:
                return bad[0]
        return None


def build_run_graph(system, ucw: BuchiAutomaton) -> RunGraph:
    """Reachable product of a transition system and a UCW.

    Vertex ``(t, q)`` has an edge on input ``i`` to ``(tau(t, i), q')`` for
    every ``q'`` in ``delta(q, out(t) | i)``.
    """
    alphabet = ucw.alphabet
    root = (0, ucw.initial)
    seen = {root: None}
    queue = [root]
    edges = {}
    k = 0
    while k < len(queue):
        t, q = queue[k]
        k += 1
        out = alphabet.output_mask(system.out[t])
        es = []
        for i in range(1 << alphabet.n_inputs):
            t2 = system.tau[t][i]
            for q2 in sorted(ucw.successors(q, out | alphabet.input_mask(i))):
                w = (t2, q2)
                es.append((i, w))
                if w not in seen:
                    seen[w] = None
                    queue.append(w)
        edges[(t, q)] = tuple(es)
    rejecting = frozenset(v for v in queue if v[1] in ucw.rejecting)
    return RunGraph(root, tuple(queue), edges, rejecting)


# --- HOA import ---------------------------------------------------------------

_HOA_EDGE = re.compile(r"\[(?P<label>[^\]]*)\]\s*(?P<target>\d+)")


def _parse_label(label: str, ap_bits: list[int]) -> list[tuple[int, int]]:
    label = label.strip()
    cubes = []
    for term in label.split("|"):
        term = term.strip().strip("()").strip()
        care = value = 0
        if term == "t":
            cubes.append((0, 0))
            continue
        if term == "f":
            continue
        for lit in term.split("&"):
            lit = lit.strip()
            neg = lit.startswith("!")
            idx = int(lit[1:] if neg else lit)
            b = ap_bits[idx]
            care |= b
            if not neg:
                value |= b
        cubes.append((care, value))
    return cubes


def parse_hoa(text: str, alphabet: AtomicAlphabet) -> BuchiAutomaton:
    """Read a HOA automaton with state-based Buchi acceptance (``Inf(0)``).

    Labels must be disjunctions of conjunctions of (possibly negated) AP
    indices, or ``t``.
    """
    header, _, body = text.partition("--BODY--")
    body = body.split("--END--")[0]
    n_states = None
    start = 0
    ap_bits: list[int] = []
    for line in header.splitlines():
        line = line.strip()
        if line.startswith("States:"):
            n_states = int(line.split(":", 1)[1])
        elif line.startswith("Start:"):
            start = int(line.split(":", 1)[1])
        elif line.startswith("AP:"):
            names = re.findall(r'"([^"]*)"', line)
            ap_bits = [alphabet.bit(n) for n in names]
        elif line.startswith("Acceptance:"):
            acc = line.split(":", 1)[1].split()
            if acc[:2] != ["1", "Inf(0)"]:
                raise ValueError("only state-based Buchi acceptance (1 Inf(0)) is supported")
    edges: dict[int, list[Edge]] = {}
    accepting = set()
    current = None
    for line in body.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("State:"):
            m = re.match(r"State:\s*(?:\[[^\]]*\]\s*)?(\d+)(?:\s+\"[^\"]*\")?\s*(\{[^}]*\})?", line)
            current = int(m.group(1))
            edges.setdefault(current, [])
            if m.group(2) and "0" in m.group(2).strip("{}").split():
                accepting.add(current)
            continue
        em = _HOA_EDGE.match(line)
        if em is None or current is None:
            raise ValueError(f"unsupported HOA line {line!r}")
        for care, value in _parse_label(em.group("label"), ap_bits):
            edges[current].append((care, value, int(em.group("target"))))
    if n_states is None:
        n_states = max(edges, default=-1) + 1
    table = tuple(tuple(edges.get(q, ())) for q in range(n_states))
    return BuchiAutomaton(alphabet, table, start, frozenset(accepting))
