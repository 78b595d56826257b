import itertools
import json
import random

import pytest

from generators import lassos_up_to, random_formula, random_system
from resynth.automata import ucw_for
from resynth.fixtures import fixture
from resynth.ltl import LassoWord, AtomicAlphabet, eval_lasso, eval_lassos, parse_ltl
from resynth.system import (
    InconsistentTransformation,
    LabelChange,
    Redirect,
    SystemShapeError,
    TransitionSystem,
    all_systems,
    apply,
    apply_all,
    diff,
    extend_states,
    from_json,
    is_consistent,
    lift_alphabet,
    make_system,
    model_check,
    op_from_dict,
    op_to_dict,
    split_counts,
    to_dot,
    to_json,
    trace_member,
)

ARB = AtomicAlphabet(["r0", "r1"], ["g0", "g1"])
E, R0, R1, RR = 0, 1, 2, 3  # input letter indices over (r0, r1)
G0, G1 = 1, 2  # output valuations


@pytest.fixture(scope="module")
def arb():
    return {name: fixture(name).system for name in ("arb0", "arb1", "arb3", "arb5", "arb0_budget4", "arb1_budget4")}


def test_fixture_arb0_shape(arb):
    a0 = arb["arb0"]
    assert a0.n == 2 and a0.out == (G0, G1)
    assert a0.tau == ((1, 1, 1, 1), (0, 0, 0, 0))


def test_apply_label_change(arb):
    assert apply(arb["arb0"], LabelChange(0, 0)) == arb["arb1"]


def test_apply_noop_label(arb):
    assert apply(arb["arb0"], LabelChange(1, G1)) == arb["arb0"]


def test_apply_redirect_fig3b(arb):
    b = apply(arb["arb1"], Redirect(0, 0, {E}))
    assert b.tau[0] == (0, 1, 1, 1)
    assert b.out == arb["arb1"].out and b.tau[1] == arb["arb1"].tau[1]


def test_apply_does_not_mutate(arb):
    before = to_json(arb["arb0"])
    apply(arb["arb0"], Redirect(0, 0, {E}))
    assert to_json(arb["arb0"]) == before


def test_apply_index_errors(arb):
    with pytest.raises(IndexError):
        apply(arb["arb0"], LabelChange(5, 0))
    with pytest.raises(IndexError):
        apply(arb["arb0"], Redirect(0, 7, {E}))


XI2 = frozenset({
    LabelChange(0, 0),
    Redirect(0, 0, {E}),
    Redirect(0, 2, {R0}),
    Redirect(0, 3, {RR}),
    Redirect(1, 2, {R0, RR}),
})


def test_consistency_examples():
    assert not is_consistent({Redirect(0, 1, {E}), Redirect(0, 0, {E})})
    assert is_consistent(XI2)
    assert is_consistent({LabelChange(0, G0), LabelChange(0, G0)})
    assert not is_consistent({LabelChange(0, G0), LabelChange(0, G1)})
    assert is_consistent({Redirect(0, 1, {E}), Redirect(0, 1, {E, R0})})


def test_apply_all_examples(arb):
    assert apply_all(arb["arb1_budget4"], {Redirect(0, 0, {E}), Redirect(0, 2, {R0})}) == arb["arb3"]
    assert apply_all(arb["arb0"], set()) == arb["arb0"]
    assert apply_all(arb["arb0_budget4"], XI2) == arb["arb5"]
    with pytest.raises(InconsistentTransformation):
        apply_all(arb["arb0"], {Redirect(0, 1, {E}), Redirect(0, 0, {E})})


def test_diff_examples(arb):
    assert diff(arb["arb0_budget4"], arb["arb5"]) == XI2
    assert split_counts(XI2) == (1, 4)
    assert diff(arb["arb0"], arb["arb0"]) == frozenset()
    with pytest.raises(SystemShapeError):
        diff(arb["arb0"], arb["arb5"])


def test_trace_member_examples(arb):
    sigma1 = LassoWord([], [{"g0"}, {"g1"}])
    assert trace_member(arb["arb0"], sigma1)
    assert not trace_member(arb["arb1"], sigma1)
    assert not trace_member(arb["arb0"], LassoWord([], [{"g1"}, {"g0"}]))


def test_model_check_examples(arb):
    fx = fixture("arb0")
    mf, full = fx.formulas["mutex_fairness"], fx.formulas["full"]
    assert model_check(arb["arb0"], mf).holds
    verdict = model_check(arb["arb0"], full)
    assert not verdict.holds
    assert trace_member(arb["arb0"], verdict.witness) and not eval_lasso(verdict.witness, full)
    assert model_check(arb["arb5"], full).holds


def test_extend_states(arb):
    ext = extend_states(arb["arb0"], 4)
    assert ext.n == 4 and ext.out[2:] == (0, 0)
    assert ext.tau[2] == (2, 2, 2, 2) and ext.tau[3] == (3, 3, 3, 3)
    assert ext.tau[:2] == arb["arb0"].tau
    assert ext.reachable() == {0, 1}
    assert extend_states(arb["arb0"], 2) == arb["arb0"]
    assert apply(ext, Redirect(0, 3, {RR})).reachable() == {0, 1, 3}
    with pytest.raises(SystemShapeError):
        extend_states(ext, 3)


def test_lift_alphabet(arb):
    wide = AtomicAlphabet(["r0", "r1", "r2"], ["g0", "g1", "g2"])
    lifted = lift_alphabet(arb["arb0"], wide)
    assert lifted.out == (G0, G1)
    assert all(lifted.tau[t][i] == lifted.tau[t][i | 4] for t in range(2) for i in range(4))
    with pytest.raises(SystemShapeError):
        lift_alphabet(lifted, ARB)


def test_json_roundtrip(arb):
    for s in arb.values():
        assert from_json(to_json(s)) == s


def test_json_schema(arb):
    data = json.loads(to_json(arb["arb0"]))
    assert data["inputs"] == ["r0", "r1"] and data["outputs"] == ["g0", "g1"]
    assert data["states"][0] == {"label": ["g0"], "trans": {"[]": 1, '["r0"]': 1, '["r1"]': 1, '["r0", "r1"]': 1}}


@pytest.mark.parametrize("text", ["{", '{"inputs": []}', '{"inputs": [], "outputs": [], "states": [{"label": [], "trans": {}}]}'])
def test_json_errors(text):
    with pytest.raises(SystemShapeError):
        from_json(text)


def test_op_json_roundtrip():
    for op in XI2:
        assert op_from_dict(json.loads(json.dumps(op_to_dict(op, ARB))), ARB) == op


def test_dot_arb0(arb):
    dot = to_dot(arb["arb0"])
    for letter in ("{}", "{r0}", "{r1}", "{r0,r1}"):
        assert letter in dot
    assert dot.count("shape=circle") == 2


def test_dot_parses(arb):
    pydot = pytest.importorskip("pydot")
    for s in arb.values():
        graphs = pydot.graph_from_dot_data(to_dot(s, "T", highlight=[(0, 0), (1, 3)]))
        assert graphs and len(graphs) == 1
        names = {n.get_name() for n in graphs[0].get_nodes()}
        assert {f"t{t}" for t in range(s.n)} <= names


def _random_ops(rng, n, n_in, n_out, count):
    ops = []
    for _ in range(count):
        if rng.random() < 0.3:
            ops.append(LabelChange(rng.randrange(n), rng.randrange(n_out)))
        else:
            letters = {i for i in range(n_in) if rng.random() < 0.5} or {rng.randrange(n_in)}
            ops.append(Redirect(rng.randrange(n), rng.randrange(n), letters))
    return ops


def test_order_independence_validates_consistency():
    rng = random.Random(3)
    seen = {True: 0, False: 0}
    for _ in range(400):
        system = random_system(rng, ARB, 4)
        ops = _random_ops(rng, 4, 4, 4, rng.randint(1, 4))
        results = set()
        for perm in itertools.permutations(ops):
            s = system
            for op in perm:
                s = apply(s, op)
            results.add(s)
        consistent = is_consistent(ops)
        seen[consistent] += 1
        if consistent:
            assert len(results) == 1
        else:
            assert len(results) > 1
    assert seen[True] > 50 and seen[False] > 50


def test_diff_roundtrip_random():
    rng = random.Random(5)
    for _ in range(300):
        a, b = random_system(rng, ARB, 3), random_system(rng, ARB, 3)
        d = diff(a, b)
        assert is_consistent(d)
        assert apply_all(a, d) == b
        # one op per changed label and per (source, target) pair with changed letters
        pairs = {(t, b.tau[t][i]) for t in range(3) for i in range(4) if a.tau[t][i] != b.tau[t][i]}
        assert len(d) == len(pairs) + sum(a.out[t] != b.out[t] for t in range(3))


def test_model_check_matches_lasso_enumeration():
    rng = random.Random(11)
    alphabet = AtomicAlphabet(["r"], ["g"])
    for _ in range(60):
        system = random_system(rng, alphabet, rng.randint(1, 3))
        f = random_formula(rng, ["r", "g"], 3)
        bound = system.n * ucw_for(f, alphabet).n_states
        words = [w for w in lassos_up_to(min(bound, 6), ["r", "g"]) if trace_member(system, w)]
        violated = not all(eval_lassos(words, f)) if words else False
        verdict = model_check(system, f)
        assert verdict.holds == (not violated) or bound > 6
        if not verdict.holds:
            assert trace_member(system, verdict.witness) and not eval_lasso(verdict.witness, f)


def test_make_system_requires_total():
    g = AtomicAlphabet(["r"], ["g"])
    with pytest.raises(SystemShapeError):
        make_system(g, [[]], [{(): 0}])


def test_all_systems_count():
    g = AtomicAlphabet(["r"], ["g"])
    assert sum(1 for _ in all_systems(g, 2)) == 4 * 16
    assert all(isinstance(s, TransitionSystem) for s in itertools.islice(all_systems(g, 2), 5))


def test_phi_fixture_formulas():
    fx = fixture("phi2_system")
    assert fx.formulas["phi2"] == parse_ltl("!g & X !g & ((G !r) -> X X g)", fx.system.alphabet)


def test_redirect_needs_letters():
    with pytest.raises(SystemShapeError):
        Redirect(0, 1, set())
