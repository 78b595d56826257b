"""Naive LTL semantics on lasso words, used to cross-check the bitset evaluator."""

from functools import lru_cache

from resynth.ltl import (
    And, Atom, FalseF, Finally, Globally, Implies, Next, Not, Or, Release, TrueF, Until,
)


def holds(word, f, pos=0):
    n = len(word)
    horizon = n + len(word.loop)  # every suffix from pos repeats within this many steps

    def canon(p):
        return p if p < n else len(word.prefix) + (p - len(word.prefix)) % len(word.loop)

    @lru_cache(maxsize=None)
    def sat(g, p):
        p = canon(p)
        if isinstance(g, TrueF):
            return True
        if isinstance(g, FalseF):
            return False
        if isinstance(g, Atom):
            return g.name in word[p]
        if isinstance(g, Not):
            return not sat(g.operand, p)
        if isinstance(g, And):
            return sat(g.left, p) and sat(g.right, p)
        if isinstance(g, Or):
            return sat(g.left, p) or sat(g.right, p)
        if isinstance(g, Implies):
            return not sat(g.left, p) or sat(g.right, p)
        if isinstance(g, Next):
            return sat(g.operand, p + 1)
        if isinstance(g, Finally):
            return any(sat(g.operand, p + d) for d in range(horizon))
        if isinstance(g, Globally):
            return all(sat(g.operand, p + d) for d in range(horizon))
        if isinstance(g, Until):
            for d in range(horizon):
                if sat(g.right, p + d):
                    return True
                if not sat(g.left, p + d):
                    return False
            return False
        if isinstance(g, Release):
            for d in range(horizon):
                if sat(g.left, p + d) and sat(g.right, p + d):
                    return True
                if not sat(g.right, p + d):
                    return False
            return True
        raise TypeError(g)

    return sat(f, pos)
