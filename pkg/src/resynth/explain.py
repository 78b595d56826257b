"""Justifications and step-by-step explanations of a repair.

A counterexample ``sigma`` justifies a transformation when it violates the
property, is a trace of the system before, and is no longer a trace after.
``explanation`` peels a repair into steps, each paired with a counterexample
from bounded model checking and shrunk greedily by single removals.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable

from .bmc import find_counterexample
from .ltl import Formula, LassoWord, eval_lasso
from .system import (
    InconsistentTransformation,
    TransitionSystem,
    apply_all,
    from_dict,
    is_consistent,
    model_check,
    op_from_dict,
    op_to_dict,
    sorted_ops,
    to_dict,
    trace_member,
)

MAX_EXHAUSTIVE = 6


class ExplanationError(RuntimeError):
    pass


def is_justification(system: TransitionSystem, formula: Formula, ops: Iterable, word: LassoWord) -> bool:
    ops = frozenset(ops)
    if not is_consistent(ops):
        raise InconsistentTransformation("justification of an inconsistent transformation")
    return (
        not eval_lasso(word, formula)
        and trace_member(system, word)
        and not trace_member(apply_all(system, ops), word)
    )


def _removals_readmit(system: TransitionSystem, ops: frozenset, word: LassoWord) -> bool:
    return all(trace_member(apply_all(system, ops - {op}), word) for op in ops)


def _subsets_readmit(system: TransitionSystem, ops: frozenset, word: LassoWord) -> bool:
    if len(ops) > MAX_EXHAUSTIVE:
        raise ValueError(f"exhaustive subset check limited to {MAX_EXHAUSTIVE} operations")
    items = sorted_ops(ops)
    for size in range(1, len(items)):
        for subset in itertools.combinations(items, size):
            if not trace_member(apply_all(system, subset), word):
                return False
    return True


def is_minimal_justification(
    system: TransitionSystem,
    formula: Formula,
    ops: Iterable,
    word: LassoWord,
    exhaustive: bool = False,
) -> bool:
    """``word`` justifies ``ops`` and no smaller transformation.

    By default only single removals are tried (greedy minimality); with
    ``exhaustive`` every strict subset is checked.
    """
    ops = frozenset(ops)
    if not is_justification(system, formula, ops, word):
        return False
    if not _removals_readmit(system, ops, word):
        return False
    return not exhaustive or _subsets_readmit(system, ops, word)


@dataclass(frozen=True)
class ExplanationStep:
    ops: frozenset
    counterexample: LassoWord
    system_after: TransitionSystem


@dataclass(frozen=True)
class Explanation:
    origin: TransitionSystem
    spec: Formula
    steps: tuple[ExplanationStep, ...]

    def __len__(self) -> int:
        return len(self.steps)

    def system_before(self, k: int) -> TransitionSystem:
        return self.origin if k == 0 else self.steps[k - 1].system_after

    def final(self) -> TransitionSystem:
        return self.system_before(len(self.steps))

    def to_list(self) -> list[dict]:
        a = self.origin.alphabet
        return [
            {
                "operations": [op_to_dict(op, a) for op in sorted_ops(step.ops)],
                "counterexample": step.counterexample.to_dict(),
                "system_after": to_dict(step.system_after),
            }
            for step in self.steps
        ]

    def to_json(self) -> str:
        return json.dumps(self.to_list(), indent=2)


def explanation_from_json(text: str, origin: TransitionSystem, spec: Formula) -> Explanation:
    steps = []
    for item in json.loads(text):
        ops = frozenset(op_from_dict(d, origin.alphabet) for d in item["operations"])
        steps.append(
            ExplanationStep(ops, LassoWord.from_dict(item["counterexample"]), from_dict(item["system_after"]))
        )
    return Explanation(origin, spec, tuple(steps))


def explanation(
    system: TransitionSystem,
    formula: Formula,
    ops: Iterable,
    k_max: int | None = None,
    backend: str | None = None,
) -> Explanation:
    """Decompose the repair ``ops`` into counterexample-justified steps."""
    remaining = frozenset(ops)
    if not is_consistent(remaining):
        raise InconsistentTransformation("cannot explain an inconsistent transformation")
    current = system
    steps = []
    while remaining:
        word = find_counterexample(current, formula, k_max, backend)
        if word is None:
            raise ExplanationError("no counterexample left although operations remain; not a minimal repair")
        chosen = sorted_ops(remaining)
        minimal = False
        while not minimal:
            minimal = True
            for op in list(chosen):
                rest = [x for x in chosen if x != op]
                if not trace_member(apply_all(current, rest), word):
                    minimal = False
                    chosen = rest
        if not chosen or trace_member(apply_all(current, chosen), word):
            raise ExplanationError(f"counterexample {word} is not excluded by the repair")
        current = apply_all(current, chosen)
        steps.append(ExplanationStep(frozenset(chosen), word, current))
        remaining -= frozenset(chosen)
    return Explanation(system, formula, tuple(steps))


def validate_explanation(expl: Explanation, ops: Iterable, exhaustive: bool = False) -> list[str]:
    """Problems found with ``expl`` as an explanation of ``ops``; empty when valid."""
    ops = frozenset(ops)
    problems = []
    seen: set = set()
    for k, step in enumerate(expl.steps):
        if seen & step.ops:
            problems.append(f"step {k} repeats operations of an earlier step")
        seen |= step.ops
        before = expl.system_before(k)
        if apply_all(before, step.ops) != step.system_after:
            problems.append(f"step {k}: recorded system differs from applying its operations")
        word = step.counterexample
        if eval_lasso(word, expl.spec):
            problems.append(f"step {k}: {word} satisfies the specification")
        if not trace_member(before, word):
            problems.append(f"step {k}: {word} is not a trace of the system before the step")
        if trace_member(step.system_after, word):
            problems.append(f"step {k}: {word} is still a trace after the step")
        if not _removals_readmit(before, step.ops, word):
            problems.append(f"step {k}: some single operation is not needed to exclude {word}")
        elif exhaustive and not _subsets_readmit(before, step.ops, word):
            problems.append(f"step {k}: a strict subset already excludes {word}")
    if seen != ops:
        problems.append("steps do not add up to the repair")
    if expl.final() != apply_all(expl.origin, ops):
        problems.append("final system differs from applying the whole repair")
    if not model_check(expl.final(), expl.spec):
        problems.append("final system does not satisfy the specification")
    return problems
