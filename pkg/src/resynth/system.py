"""Moore-style transition systems and the label-change / redirect algebra.

A system over an alphabet with inputs ``I`` and outputs ``O`` has states
``0..n-1`` (state 0 is initial), a total transition table ``tau[t][i]``
indexed by input letters ``i`` in ``0..2^|I|-1`` and an output valuation
``out[t]`` in ``0..2^|O|-1``.  The trace letter at a step is the state's
output together with the input consumed there.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Union

from .automata import build_run_graph, ucw_for
from .ltl import AtomicAlphabet, Formula, LassoWord


class SystemShapeError(ValueError):
    pass


class InconsistentTransformation(ValueError):
    pass


@dataclass(frozen=True)
class TransitionSystem:
    alphabet: AtomicAlphabet
    tau: tuple[tuple[int, ...], ...]
    out: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "tau", tuple(tuple(row) for row in self.tau))
        object.__setattr__(self, "out", tuple(self.out))
        n = len(self.out)
        if n == 0:
            raise SystemShapeError("a transition system needs at least one state")
        if len(self.tau) != n:
            raise SystemShapeError("tau and out disagree on the number of states")
        n_in = 1 << self.alphabet.n_inputs
        for row in self.tau:
            if len(row) != n_in or any(not 0 <= t < n for t in row):
                raise SystemShapeError("tau must be total with targets in range")
        if any(not 0 <= o < 1 << self.alphabet.n_outputs for o in self.out):
            raise SystemShapeError("output valuation out of range")

    @property
    def n(self) -> int:
        return len(self.out)

    def __len__(self) -> int:
        return len(self.out)

    def label(self, t: int) -> frozenset[str]:
        return self.alphabet.output_letter(self.out[t])

    def reachable(self) -> set[int]:
        seen = {0}
        queue = deque([0])
        while queue:
            t = queue.popleft()
            for t2 in self.tau[t]:
                if t2 not in seen:
                    seen.add(t2)
                    queue.append(t2)
        return seen


def make_system(
    alphabet: AtomicAlphabet,
    labels: list[Iterable[str]],
    transitions: list[dict],
) -> TransitionSystem:
    """Build a system from named labels and ``{input-letter: target}`` maps.

    Keys of a transition map are iterables of input names; missing letters
    are an error.
    """
    tau = []
    for t, row in enumerate(transitions):
        targets = [None] * (1 << alphabet.n_inputs)
        for letter, target in row.items():
            targets[alphabet.input_index(letter)] = target
        if None in targets:
            raise SystemShapeError(f"state {t} lacks a transition for some input")
        tau.append(tuple(targets))
    out = [alphabet.output_index(lbl) for lbl in labels]
    return TransitionSystem(alphabet, tuple(tau), tuple(out))


# --- operations ---------------------------------------------------------------


@dataclass(frozen=True, order=True)
class LabelChange:
    state: int
    label: int  # output valuation

    kind = 0

    def sort_key(self):
        return (self.kind, self.state, self.label)


@dataclass(frozen=True, order=True)
class Redirect:
    source: int
    target: int
    letters: frozenset[int]  # input letters

    kind = 1

    def __post_init__(self):
        object.__setattr__(self, "letters", frozenset(self.letters))
        if not self.letters:
            raise SystemShapeError("a redirect needs a nonempty letter set")

    def sort_key(self):
        return (self.kind, self.source, self.target, tuple(sorted(self.letters)))


RepairOperation = Union[LabelChange, Redirect]
Transformation = frozenset  # of RepairOperation


def sorted_ops(ops: Iterable[RepairOperation]) -> list[RepairOperation]:
    return sorted(ops, key=lambda op: op.sort_key())


def _check_op(system: TransitionSystem, op: RepairOperation) -> None:
    if isinstance(op, LabelChange):
        if not 0 <= op.state < system.n:
            raise IndexError(f"state {op.state} out of range")
        if not 0 <= op.label < 1 << system.alphabet.n_outputs:
            raise IndexError("label out of range")
    elif isinstance(op, Redirect):
        if not (0 <= op.source < system.n and 0 <= op.target < system.n):
            raise IndexError("redirect state out of range")
        if any(not 0 <= i < 1 << system.alphabet.n_inputs for i in op.letters):
            raise IndexError("input letter out of range")
    else:
        raise TypeError(f"not an operation: {op!r}")


def apply(system: TransitionSystem, op: RepairOperation) -> TransitionSystem:
    _check_op(system, op)
    if isinstance(op, LabelChange):
        out = list(system.out)
        out[op.state] = op.label
        return TransitionSystem(system.alphabet, system.tau, tuple(out))
    row = list(system.tau[op.source])
    for i in op.letters:
        row[i] = op.target
    tau = list(system.tau)
    tau[op.source] = tuple(row)
    return TransitionSystem(system.alphabet, tuple(tau), system.out)


def is_consistent(ops: Iterable[RepairOperation]) -> bool:
    """No two operations disagree on a state's label or on a (state, letter) target."""
    labels: dict[int, int] = {}
    targets: dict[tuple[int, int], int] = {}
    for op in set(ops):
        if isinstance(op, LabelChange):
            if labels.setdefault(op.state, op.label) != op.label:
                return False
        else:
            for i in op.letters:
                if targets.setdefault((op.source, i), op.target) != op.target:
                    return False
    return True


def apply_all(system: TransitionSystem, ops: Iterable[RepairOperation]) -> TransitionSystem:
    ops = set(ops)
    if not is_consistent(ops):
        raise InconsistentTransformation("operations conflict")
    for op in sorted_ops(ops):
        system = apply(system, op)
    return system


def diff(before: TransitionSystem, after: TransitionSystem) -> frozenset:
    """Operations turning ``before`` into ``after``, redirects grouped per (source, target)."""
    if before.n != after.n or before.alphabet != after.alphabet:
        raise SystemShapeError("systems differ in shape")
    ops: set = set()
    for t in range(before.n):
        if before.out[t] != after.out[t]:
            ops.add(LabelChange(t, after.out[t]))
        groups: dict[int, set[int]] = {}
        for i, (a, b) in enumerate(zip(before.tau[t], after.tau[t])):
            if a != b:
                groups.setdefault(b, set()).add(i)
        for target, letters in groups.items():
            ops.add(Redirect(t, target, frozenset(letters)))
    return frozenset(ops)


def split_counts(ops: Iterable[RepairOperation]) -> tuple[int, int]:
    """(label changes, redirects)."""
    ops = list(ops)
    chl = sum(isinstance(op, LabelChange) for op in ops)
    return chl, len(ops) - chl


def extend_states(system: TransitionSystem, n: int) -> TransitionSystem:
    """Pad to ``n`` states; new states output nothing and loop on every input."""
    if n < system.n:
        raise SystemShapeError(f"cannot shrink a {system.n}-state system to {n} states")
    n_in = 1 << system.alphabet.n_inputs
    tau = list(system.tau) + [(t,) * n_in for t in range(system.n, n)]
    out = list(system.out) + [0] * (n - system.n)
    return TransitionSystem(system.alphabet, tuple(tau), tuple(out))


def lift_alphabet(system: TransitionSystem, alphabet: AtomicAlphabet) -> TransitionSystem:
    """Re-express ``system`` over a larger alphabet.

    New inputs are ignored (a letter moves like its restriction to the old
    inputs) and new outputs are never set.
    """
    old = system.alphabet
    if not set(old.inputs) <= set(alphabet.inputs) or not set(old.outputs) <= set(alphabet.outputs):
        raise SystemShapeError("the new alphabet must contain the old propositions")
    tau = tuple(
        tuple(row[old.input_index(alphabet.input_letter(i))] for i in range(1 << alphabet.n_inputs))
        for row in system.tau
    )
    out = tuple(alphabet.output_index(old.output_letter(o)) for o in system.out)
    return TransitionSystem(alphabet, tau, out)


# --- traces -------------------------------------------------------------------


def trace_member(system: TransitionSystem, word: LassoWord) -> bool:
    """Whether ``word`` is the trace of an initial path of ``system``."""
    alphabet = system.alphabet
    allowed = set(alphabet.props)
    outputs = set(alphabet.outputs)
    t = 0

    def step(t: int, letter: frozenset[str]) -> int | None:
        if not letter <= allowed:
            return None
        if alphabet.output_index(letter & outputs) != system.out[t]:
            return None
        return system.tau[t][alphabet.input_index(letter)]

    for letter in word.prefix:
        t = step(t, letter)
        if t is None:
            return False
    seen = set()
    k = 0
    while (t, k) not in seen:
        seen.add((t, k))
        t = step(t, word.loop[k])
        if t is None:
            return False
        k = (k + 1) % len(word.loop)
    return True


@dataclass(frozen=True)
class Verdict:
    holds: bool
    witness: LassoWord | None = None

    def __bool__(self) -> bool:
        return self.holds


def model_check(system: TransitionSystem, formula: Formula, ucw=None) -> Verdict:
    """Explicit run-graph check; a failing verdict carries a lasso counterexample."""
    if ucw is None:
        ucw = ucw_for(formula, system.alphabet)
    graph = build_run_graph(system, ucw)
    bad = graph.rejecting_cycle_vertex()
    if bad is None:
        return Verdict(True)
    alphabet = system.alphabet

    def letter(vertex, i):
        return alphabet.output_letter(system.out[vertex[0]]) | alphabet.input_letter(i)

    def path(src, dst, nonempty: bool) -> list[frozenset[str]]:
        parent: dict = {}
        queue: deque = deque()
        if nonempty:
            for i, w in graph.edges[src]:
                if w not in parent:
                    parent[w] = (src, i)
                    queue.append(w)
        else:
            parent[src] = None
            queue.append(src)
        while queue and dst not in parent:
            v = queue.popleft()
            for i, w in graph.edges[v]:
                if w not in parent:
                    parent[w] = (v, i)
                    queue.append(w)
        steps = []
        v = dst
        while parent[v] is not None:
            u, i = parent[v]
            steps.append(letter(u, i))
            if nonempty and u == src:
                break
            v = u
        return steps[::-1]

    prefix = path(graph.root, bad, False)
    loop = path(bad, bad, True)
    return Verdict(False, LassoWord(prefix, loop))


# --- serialization --------------------------------------------------------------


def _letter_key(names: Iterable[str]) -> str:
    return json.dumps(sorted(names))


def to_dict(system: TransitionSystem) -> dict:
    a = system.alphabet
    states = []
    for t in range(system.n):
        trans = {_letter_key(a.input_letter(i)): system.tau[t][i] for i in range(1 << a.n_inputs)}
        states.append({"label": sorted(system.label(t)), "trans": trans})
    return {"inputs": list(a.inputs), "outputs": list(a.outputs), "states": states}


def from_dict(data: dict) -> TransitionSystem:
    try:
        alphabet = AtomicAlphabet(data["inputs"], data["outputs"])
        labels = [s["label"] for s in data["states"]]
        rows = []
        for s in data["states"]:
            rows.append({tuple(json.loads(k)): v for k, v in s["trans"].items()})
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise SystemShapeError(f"malformed system description: {exc}") from exc
    return make_system(alphabet, labels, rows)


def to_json(system: TransitionSystem) -> str:
    return json.dumps(to_dict(system), indent=2)


def from_json(text: str) -> TransitionSystem:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemShapeError(f"malformed JSON: {exc}") from exc
    return from_dict(data)


def op_to_dict(op: RepairOperation, alphabet: AtomicAlphabet) -> dict:
    if isinstance(op, LabelChange):
        return {"type": "label", "state": op.state, "label": sorted(alphabet.output_letter(op.label))}
    return {
        "type": "redirect",
        "source": op.source,
        "target": op.target,
        "letters": [sorted(alphabet.input_letter(i)) for i in sorted(op.letters)],
    }


def op_from_dict(data: dict, alphabet: AtomicAlphabet) -> RepairOperation:
    if data["type"] == "label":
        return LabelChange(data["state"], alphabet.output_index(data["label"]))
    if data["type"] == "redirect":
        letters = frozenset(alphabet.input_index(x) for x in data["letters"])
        return Redirect(data["source"], data["target"], letters)
    raise SystemShapeError(f"unknown operation type {data['type']!r}")


def describe_op(op: RepairOperation, alphabet: AtomicAlphabet) -> str:
    def show(s):
        return "{" + ", ".join(sorted(s)) + "}"

    if isinstance(op, LabelChange):
        return f"label t{op.state} := {show(alphabet.output_letter(op.label))}"
    letters = ", ".join(show(alphabet.input_letter(i)) for i in sorted(op.letters))
    return f"redirect t{op.source} --[{letters}]--> t{op.target}"


def to_dot(system: TransitionSystem, name: str = "T", highlight: Iterable[tuple[int, int]] = ()) -> str:
    """Graphviz rendering; edges are grouped by target and list their input letters.

    ``highlight`` holds ``(state, input letter)`` pairs drawn in red.
    """
    a = system.alphabet
    marked = set(highlight)

    def show(s):
        return "{" + ",".join(sorted(s)) + "}"

    lines = [f'digraph "{name}" {{', "  rankdir=LR;", '  init [shape=point, label=""];']
    for t in range(system.n):
        lines.append(f'  t{t} [shape=circle, label="t{t}\\n{show(system.label(t))}"];')
    lines.append("  init -> t0;")
    for t in range(system.n):
        groups: dict[tuple[int, bool], list[int]] = {}
        for i, t2 in enumerate(system.tau[t]):
            groups.setdefault((t2, (t, i) in marked), []).append(i)
        for (t2, red), letters in sorted(groups.items()):
            label = ", ".join(show(a.input_letter(i)) for i in letters)
            style = ", color=red, fontcolor=red" if red else ""
            lines.append(f'  t{t} -> t{t2} [label="{label}"{style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def all_systems(alphabet: AtomicAlphabet, n: int):
    """Every n-state system over ``alphabet`` (exponential; for tests and oracles)."""
    n_in = 1 << alphabet.n_inputs
    n_out = 1 << alphabet.n_outputs
    for outs in itertools.product(range(n_out), repeat=n):
        for flat in itertools.product(range(n), repeat=n * n_in):
            tau = tuple(tuple(flat[t * n_in:(t + 1) * n_in]) for t in range(n))
            yield TransitionSystem(alphabet, tau, outs)
