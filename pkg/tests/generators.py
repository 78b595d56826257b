"""Formula, lasso and system generators shared by the test modules."""

from __future__ import annotations

import itertools
import random

from resynth.ltl import (
    FALSE,
    TRUE,
    And,
    Atom,
    AtomicAlphabet,
    Finally,
    Globally,
    Implies,
    LassoWord,
    Next,
    Not,
    Or,
    Release,
    Until,
)
from resynth.system import TransitionSystem

UNARY = (Not, Next, Finally, Globally)
BINARY = (And, Or, Implies, Until, Release)


def formulas_up_to(depth: int, names: list[str]):
    """Every formula of AST depth <= ``depth`` over ``names`` (leaf depth 1)."""
    levels = [[TRUE, FALSE] + [Atom(p) for p in names]]
    for _ in range(depth - 1):
        known = [f for level in levels for f in level]
        prev = levels[-1]
        prev_set = set(prev)
        new = [op(f) for op in UNARY for f in prev]
        for op in BINARY:
            for a, b in itertools.product(known, repeat=2):
                if a in prev_set or b in prev_set:
                    new.append(op(a, b))
        levels.append(new)
    return [f for level in levels for f in level]


def random_formula(rng: random.Random, names: list[str], depth: int):
    if depth <= 1 or rng.random() < 0.2:
        return rng.choice([TRUE, FALSE] + [Atom(p) for p in names] * 3)
    if rng.random() < 0.4:
        return rng.choice(UNARY)(random_formula(rng, names, depth - 1))
    op = rng.choice(BINARY)
    return op(random_formula(rng, names, depth - 1), random_formula(rng, names, depth - 1))


def all_letters(names: list[str]):
    return [frozenset(c) for r in range(len(names) + 1) for c in itertools.combinations(names, r)]


def lassos_up_to(total: int, names: list[str]):
    """Every lasso with 1 <= |prefix| + |loop| <= total (loop nonempty)."""
    letters = all_letters(names)
    out = []
    for size in range(1, total + 1):
        for split in range(size):
            for word in itertools.product(letters, repeat=size):
                out.append(LassoWord(word[:split], word[split:]))
    return out


def random_lasso(rng: random.Random, names: list[str], max_total: int) -> LassoWord:
    letters = all_letters(names)
    size = rng.randint(1, max_total)
    split = rng.randrange(size)
    word = [rng.choice(letters) for _ in range(size)]
    return LassoWord(word[:split], word[split:])


def random_system(rng: random.Random, alphabet: AtomicAlphabet, n: int) -> TransitionSystem:
    n_in = 1 << alphabet.n_inputs
    tau = tuple(tuple(rng.randrange(n) for _ in range(n_in)) for _ in range(n))
    out = tuple(rng.randrange(1 << alphabet.n_outputs) for _ in range(n))
    return TransitionSystem(alphabet, tau, out)


# --- hypothesis strategies ---------------------------------------------------

try:
    from hypothesis import strategies as st
except ImportError:  # pragma: no cover
    st = None

if st is not None:

    def formula_strategy(names: list[str], max_leaves: int = 12):
        leaves = st.sampled_from([TRUE, FALSE] + [Atom(p) for p in names])
        return st.recursive(
            leaves,
            lambda sub: st.one_of(
                st.builds(lambda op, f: op(f), st.sampled_from(UNARY), sub),
                st.builds(lambda op, a, b: op(a, b), st.sampled_from(BINARY), sub, sub),
            ),
            max_leaves=max_leaves,
        )

    def lasso_strategy(names: list[str], max_total: int = 5):
        letters = st.frozensets(st.sampled_from(names)) if names else st.just(frozenset())
        return st.integers(1, max_total).flatmap(
            lambda size: st.tuples(st.lists(letters, min_size=size, max_size=size), st.integers(0, size - 1))
        ).map(lambda pair: LassoWord(pair[0][: pair[1]], pair[0][pair[1]:]))
