import random

import pytest

from generators import random_formula
from resynth.automata import ucw_for
from resynth.fixtures import fixture
from resynth.ltl import AtomicAlphabet, parse_ltl
from resynth.satcore import solve
from resynth.synthesis import decode_model, encode_bounded_synthesis, synthesize
from resynth.system import all_systems, model_check

G = AtomicAlphabet([], ["g"])
RG = AtomicAlphabet(["r"], ["g"])


def test_globally_g_one_state():
    s = synthesize(parse_ltl("G g", G), 1, G)
    assert s is not None and s.n == 1
    assert s.out == (1,) and s.tau == ((0,),)


def test_contradiction_unsat():
    f = parse_ltl("g & X !g & G g", G)
    for n in (1, 2, 3):
        assert synthesize(f, n, G) is None


def test_arbiter_two_states():
    fx = fixture("arb0")
    f = fx.formulas["mutex_fairness"]
    s = synthesize(f, 2, fx.system.alphabet)
    assert s is not None and s.n == 2
    assert model_check(s, f).holds


def test_full_arbiter_needs_four_states():
    fx = fixture("arb0")
    f = fx.formulas["full"]
    a = fx.system.alphabet
    ucw = ucw_for(f, a)
    assert synthesize(f, 3, a, ucw=ucw) is None
    s = synthesize(f, 4, a, ucw=ucw)
    assert s is not None and model_check(s, f).holds


def test_varmap_shape():
    f = parse_ltl("G (r -> X g)", RG)
    cnf, vmap = encode_bounded_synthesis(ucw_for(f, RG), 2, RG)
    assert set(vmap.tau) == {(t, i, t2) for t in range(2) for i in range(2) for t2 in range(2)}
    assert set(vmap.out) == {(0, 0), (0, 1)}
    out = solve(cnf)
    assert out
    for t in range(2):
        for i in range(2):
            assert sum(out.value(vmap.tau_var(t, i, t2)) for t2 in range(2)) == 1
    # order encoding: bit c implies bit c-1
    for (t, q, c), v in vmap.count.items():
        if c > 1 and out.value(v):
            assert out.value(vmap.count[t, q, c - 1])
    s = decode_model(out, vmap)
    assert model_check(s, f).holds


def test_bad_bound():
    with pytest.raises(ValueError):
        encode_bounded_synthesis(ucw_for(parse_ltl("g", G), G), 0, G)


def test_monotone_in_bound():
    rng = random.Random(21)
    for _ in range(40):
        f = random_formula(rng, ["r", "g"], 3)
        ucw = ucw_for(f, RG)
        found = [synthesize(f, n, RG, ucw=ucw) is not None for n in (1, 2, 3)]
        assert found == sorted(found)


def test_complete_against_exhaustive_search():
    rng = random.Random(8)
    systems = {n: list(all_systems(RG, n)) for n in (1, 2)}
    checked = 0
    for _ in range(60):
        f = random_formula(rng, ["r", "g"], 3)
        ucw = ucw_for(f, RG)
        for n in (1, 2):
            exists = any(model_check(s, f, ucw).holds for s in systems[n])
            s = synthesize(f, n, RG, ucw=ucw)
            assert (s is not None) == exists, (f, n)
            if s is not None:
                assert model_check(s, f, ucw).holds
            checked += 1
    assert checked == 120


def test_next_patterns_need_distinct_states():
    f = parse_ltl("g & X !g & X X g & X X X !g & G (g -> X !g) & G (!g -> X g)", G)
    assert synthesize(f, 1, G) is None
    assert synthesize(f, 2, G) is not None
