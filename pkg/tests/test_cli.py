import csv
import json

import pytest

from resynth import cli
from resynth.cli import InputError, SpecFile, gen_benchmark, main
from resynth.fixtures import fixture
from resynth.ltl import conjuncts, parse_ltl
from resynth.system import from_json, model_check


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_spec(tmp_path, name, inputs, outputs, props):
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps({"inputs": inputs, "outputs": outputs, "properties": props}))
    return p


def test_gen_arbiter_matches_fixture_formulas():
    fx = fixture("arb0")
    a = fx.system.alphabet
    assert gen_benchmark("arbiter", 2).formula() == fx.formulas["mutex_fairness"]
    assert set(conjuncts(gen_benchmark("arbiter_full", 2).formula())) == set(conjuncts(fx.formulas["full"]))
    one = gen_benchmark("arbiter", 1)
    assert one.formula() == parse_ltl("G (r0 -> F g0)", one.alphabet)
    assert a == gen_benchmark("arbiter", 2).alphabet


def test_gen_errors():
    with pytest.raises(InputError):
        gen_benchmark("amba", 2)
    with pytest.raises(InputError):
        gen_benchmark("arbiter", 0)


def test_gen_command(tmp_path, capsys):
    out = tmp_path / "a3.json"
    code, _, _ = run(capsys, "gen", "arbiter_full", 3, "--json-out", out)
    assert code == 0
    spec = SpecFile.from_dict(json.loads(out.read_text()))
    assert spec.inputs == ("r0", "r1", "r2") and len(spec.properties) == 3 + 3 + 3


def test_empty_spec_holds(tmp_path, capsys):
    spec = write_spec(tmp_path, "empty", ["r0", "r1"], ["g0", "g1"], [])
    code, out, _ = run(capsys, "check", "arb0", spec)
    assert code == 0 and out.strip() == "holds"


def test_check_fixtures(capsys, tmp_path):
    assert run(capsys, "check", "arb5", "spec_arbiter_full2")[0] == 0
    witness = tmp_path / "w.json"
    code, out, _ = run(capsys, "check", "arb0", "spec_arbiter_full2", "--json-out", witness)
    assert code == 1 and out.startswith("fails")
    assert set(json.loads(witness.read_text())) == {"prefix", "loop"}


def test_synth(tmp_path, capsys):
    out = tmp_path / "s.json"
    code, _, _ = run(capsys, "synth", "spec_arbiter2", "-n", 2, "--json-out", out, "--dot-out", tmp_path)
    assert code == 0
    system = from_json(out.read_text())
    assert system.n == 2
    assert run(capsys, "check", out, "spec_arbiter2")[0] == 0
    assert (tmp_path / "synthesized.dot").exists()


def test_synth_unrealizable(tmp_path, capsys):
    spec = write_spec(tmp_path, "bad", [], ["g"], ["g", "X !g", "G g"])
    code, _, err = run(capsys, "synth", spec, "-n", 2)
    assert code == 1 and "unrealizable at bound 2" in err


def test_synth_bad_bound(capsys):
    assert run(capsys, "synth", "spec_arbiter2", "-n", 0)[0] == 2


def test_input_errors(tmp_path, capsys):
    assert run(capsys, "check", "nope.json", "spec_arbiter2")[0] == 2
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    assert run(capsys, "check", "arb0", broken)[0] == 2
    syntax = write_spec(tmp_path, "syntax", ["r0", "r1"], ["g0", "g1"], ["G (g0 &"])
    assert run(capsys, "check", "arb0", syntax)[0] == 2
    unknown = write_spec(tmp_path, "unknown", ["r0", "r1"], ["g0", "g1"], ["G q"])
    assert run(capsys, "check", "arb0", unknown)[0] == 2
    assert run(capsys, "check", "arb0", "spec_phi1")[0] == 2  # alphabet mismatch
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_repair_arbiter(tmp_path, capsys):
    out = tmp_path / "repair.json"
    code, _, err = run(capsys, "repair", "arb0_budget4", "spec_arbiter_full2", "--json-out", out,
                       "--dot-out", tmp_path)
    assert code == 0 and "5 (1 chL / 4 rdT)" in err
    data = json.loads(out.read_text())
    assert data["size"] == 5 and data["chL"] == 1 and data["rdT"] == 4
    repaired = tmp_path / "repaired.json"
    repaired.write_text(json.dumps(data["repaired"]))
    assert run(capsys, "check", repaired, "spec_arbiter_full2")[0] == 0
    assert (tmp_path / "before.dot").exists() and (tmp_path / "after.dot").exists()


def test_repair_fixed_k(capsys, tmp_path):
    assert run(capsys, "repair", "arb0_budget4", "spec_arbiter_full2", "--k", 4)[0] == 1
    assert run(capsys, "repair", "arb0_budget4", "spec_arbiter_full2", "--k", 5,
               "--json-out", tmp_path / "r.json")[0] == 0


def test_repair_already_satisfied(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert run(capsys, "repair", "arb0", "spec_arbiter2", "--json-out", out)[0] == 0
    assert json.loads(out.read_text())["operations"] == []


def test_repair_phi2(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, err = run(capsys, "repair", "phi2_system", "spec_phi2", "-N", 3, "--json-out", out)
    assert code == 0 and "2 (0 chL / 2 rdT)" in err


def test_repair_self_loop_budget(tmp_path, capsys):
    # plain extension of the two-state arbiter starts from idle extra states
    out = tmp_path / "r.json"
    code, _, err = run(capsys, "repair", "arb0", "spec_arbiter_full2", "-N", 4, "--json-out", out)
    assert code == 0 and "operations: 10 (" in err


def test_repair_small_budget(capsys):
    assert run(capsys, "repair", "arb5", "spec_arbiter_full2", "-N", 2)[0] == 2


def test_explain_auto(tmp_path, capsys):
    out = tmp_path / "expl.json"
    code, _, err = run(capsys, "explain", "arb0_budget4", "spec_arbiter_full2", "--auto", "-N", 4,
                       "--json-out", out, "--dot-out", tmp_path)
    assert code == 0 and "steps: 5" in err
    assert len(json.loads(out.read_text())) == 5
    assert sorted(p.name for p in tmp_path.glob("step*.dot")) == [f"step{k}.dot" for k in range(1, 6)]


def test_explain_frames_highlight(tmp_path, capsys):
    run(capsys, "explain", "arb0_budget4", "spec_arbiter_full2", "--auto", "--dot-out", tmp_path,
        "--json-out", tmp_path / "e.json")
    first = (tmp_path / "step1.dot").read_text()
    assert "color=red" in first


def test_explain_from_repair_file(tmp_path, capsys):
    rep = tmp_path / "r.json"
    run(capsys, "repair", "phi2_system", "spec_phi2", "--json-out", rep)
    out = tmp_path / "e.json"
    code, _, err = run(capsys, "explain", "phi2_system", "spec_phi2", rep, "--json-out", out,
                       "--dot-out", tmp_path)
    assert code == 0 and "steps: 1" in err
    steps = json.loads(out.read_text())
    assert len(steps[0]["operations"]) == 2
    assert steps[0]["counterexample"] == {"prefix": [], "loop": [[]]}
    assert len(list(tmp_path.glob("step*.dot"))) == 1


def test_explain_satisfied_is_empty(tmp_path, capsys):
    out = tmp_path / "e.json"
    code, _, err = run(capsys, "explain", "arb5", "spec_arbiter2", "--auto", "--json-out", out,
                       "--dot-out", tmp_path)
    assert code == 0 and json.loads(out.read_text()) == []
    assert not list(tmp_path.glob("step*.dot"))


def test_explain_needs_repair(capsys):
    assert run(capsys, "explain", "arb0", "spec_arbiter_full2")[0] == 2


def test_pipeline_arbiter_fixture(tmp_path, capsys):
    report = tmp_path / "report.csv"
    out = tmp_path / "run"
    code, table, _ = run(capsys, "pipeline", "arbiter:2", "arbiter_full:2", "--initial-system", "arb0_budget4",
                         "-N", 4, "--report", report, "--json-out", out)
    assert code == 0
    rows = list(csv.DictReader(report.open()))
    assert len(rows) == 1
    row = rows[0]
    assert (row["operations"], row["chL"], row["rdT"], row["justifications"]) == ("5", "1", "4", "5")
    assert report.with_suffix(".md").read_text().startswith("| initial_spec")
    for name in ("initial.json", "extended_budget.json", "repaired.json"):
        assert from_json((out / name).read_text())
    assert run(capsys, "check", out / "repaired.json", out / "extended_spec.json")[0] == 0


def test_pipeline_same_spec(capsys):
    code, table, _ = run(capsys, "pipeline", "arbiter:2", "arbiter:2")
    assert code == 0
    assert "| 0 | 0 | 0 | 0 |" in table


def test_pipeline_report_appends(tmp_path, capsys):
    report = tmp_path / "r.csv"
    for _ in range(2):
        run(capsys, "pipeline", "arbiter:1", "arbiter:1", "--report", report)
    assert len(list(csv.DictReader(report.open()))) == 2


def test_pipeline_timeout(capsys, monkeypatch):
    def slow(*args, **kwargs):
        import time
        time.sleep(5)

    monkeypatch.setattr(cli, "run_pipeline", slow)
    code, table, _ = run(capsys, "pipeline", "arbiter:2", "arbiter_full:2", "--timeout", 0.2)
    assert code == 3 and "timeout" in table


def test_timeout_other_commands(capsys, monkeypatch):
    def slow(*args, **kwargs):
        import time
        time.sleep(5)

    monkeypatch.setattr(cli, "synthesize", slow)
    assert run(capsys, "synth", "spec_arbiter2", "-n", 2, "--timeout", 0.2)[0] == 3


def test_pipeline_next_chain(capsys, tmp_path):
    report = tmp_path / "r.csv"
    code, _, _ = run(capsys, "pipeline", "next_chain:3", "next_chain:3:ext", "--report", report)
    assert code == 0
    row = next(csv.DictReader(report.open()))
    assert (row["chL"], row["rdT"]) == ("3", "0")


def test_next_chain_forces_states():
    from resynth.synthesis import synthesize

    for n in (2, 3):
        spec = gen_benchmark("next_chain", n)
        assert synthesize(spec.formula(), n - 1, spec.alphabet) is None
        s = synthesize(spec.formula(), n, spec.alphabet)
        assert s is not None and model_check(s, spec.formula()).holds


def test_seed_flag(tmp_path, capsys):
    out = tmp_path / "s.json"
    assert run(capsys, "synth", "spec_arbiter2", "-n", 2, "--seed", 3, "--json-out", out)[0] == 0
    assert run(capsys, "check", out, "spec_arbiter2")[0] == 0


def test_external_solver_flag(tmp_path, capsys, external_solver):
    out = tmp_path / "r.json"
    code, _, err = run(capsys, "repair", "arb0_budget4", "spec_arbiter_full2", "--solver", external_solver,
                       "--json-out", out)
    assert code == 0 and "5 (1 chL / 4 rdT)" in err


def test_spec_roundtrip():
    spec = gen_benchmark("arbiter_full", 2)
    assert SpecFile.from_dict(json.loads(json.dumps(spec.to_dict())), spec.name) == spec
