"""Command-line interface: synth, repair, explain, check, gen, pipeline.

Exit codes: 0 success, 1 unrealizable / no repair / property fails,
2 input error, 3 resource limit or timeout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import signal
import sys
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from pathlib import Path

from . import satcore
from .automata import AutomatonSizeError, ucw_for
from .explain import Explanation, ExplanationError, explanation, validate_explanation
from .fixtures import SPEC_FIXTURES, SYSTEM_FIXTURES, fixture_path
from .ltl import TRUE, AtomicAlphabet, Formula, LtlError, conj, parse_ltl
from .repair import minimal_repair, repair
from .synthesis import synthesize
from .system import (
    LabelChange,
    SystemShapeError,
    TransitionSystem,
    apply_all,
    extend_states,
    from_json,
    is_consistent,
    lift_alphabet,
    model_check,
    op_from_dict,
    op_to_dict,
    sorted_ops,
    split_counts,
    to_dot,
    to_json,
)

log = logging.getLogger("resynth")

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3
DEFAULT_TIMEOUT = 7200.0


class InputError(Exception):
    pass


# --- spec files ---------------------------------------------------------------


@dataclass(frozen=True)
class SpecFile:
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    properties: tuple[str, ...]
    name: str = "spec"

    @property
    def alphabet(self) -> AtomicAlphabet:
        return AtomicAlphabet(self.inputs, self.outputs)

    def formula(self) -> Formula:
        a = self.alphabet
        return conj(parse_ltl(p, a) for p in self.properties) if self.properties else TRUE

    def to_dict(self) -> dict:
        return {"inputs": list(self.inputs), "outputs": list(self.outputs), "properties": list(self.properties)}

    @classmethod
    def from_dict(cls, data: dict, name: str = "spec") -> "SpecFile":
        try:
            spec = cls(tuple(data["inputs"]), tuple(data["outputs"]), tuple(data["properties"]), name)
        except (KeyError, TypeError) as exc:
            raise InputError(f"spec file needs inputs, outputs and properties: {exc}") from exc
        spec.formula()  # validate early
        return spec


def _resolve(path: str) -> Path:
    """A file path, or the name of a shipped fixture."""
    p = Path(path)
    if p.exists():
        return p
    if path in SYSTEM_FIXTURES or path in SPEC_FIXTURES:
        return Path(str(fixture_path(path)))
    raise InputError(f"no such file or fixture: {path}")


def load_spec(path: str) -> SpecFile:
    p = _resolve(path)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON: {exc}") from exc
    return SpecFile.from_dict(data, p.stem)


def load_system(path: str) -> TransitionSystem:
    return from_json(_resolve(path).read_text())


def _same_alphabet(system: TransitionSystem, spec: SpecFile) -> None:
    if system.alphabet != spec.alphabet:
        raise InputError("system and specification use different propositions")


# --- benchmark generators -------------------------------------------------------


def gen_benchmark(family: str, n: int, extended: bool = False) -> SpecFile:
    if n < 1:
        raise InputError("benchmark size must be at least 1")
    if family in ("arbiter", "arbiter_full"):
        inputs = tuple(f"r{i}" for i in range(n))
        outputs = tuple(f"g{i}" for i in range(n))
        props = [f"G (!g{i} | !g{j})" for i in range(n) for j in range(i + 1, n)]
        props += [f"G (r{i} -> F g{i})" for i in range(n)]
        if family == "arbiter_full":
            props += [f"(r{i} R !g{i}) & G (g{i} -> r{i} | X (r{i} R !g{i}))" for i in range(n)]
        name = f"{family}{n}"
        return SpecFile(inputs, outputs, tuple(props), name)
    if family == "next_chain":
        return _next_chain(n, extended)
    raise InputError(f"unknown benchmark family {family!r}")


def _nexts(k: int, body: str) -> str:
    return "X " * k + body if k else body


def _next_chain(n: int, extended: bool) -> SpecFile:
    """Output ``b`` holds exactly at positions 0, n, 2n, ...; forces n states.

    The base variant keeps ``c`` off; the extended one instead demands ``c``
    at the first four offsets of every period, so the repair relabels
    ``min(n, 4)`` states and redirects nothing.
    """
    gaps = " & ".join(_nexts(k, "!b") for k in range(1, n)) if n > 1 else ""
    period = f"G (b -> {gaps + ' & ' if gaps else ''}{_nexts(n, 'b')})"
    props = ["b", period]
    if extended:
        props.append("G (b -> " + " & ".join(_nexts(k, "c") for k in range(min(n, 4))) + ")")
        offsets = " | ".join(_nexts(k, "b") for k in range(n - min(n, 4) + 1, n + 1)) if n > 4 else ""
        if offsets:
            props.append(f"G (c -> {offsets})")
    else:
        props.append("G !c")
    name = f"next_chain{n}{'_ext' if extended else ''}"
    return SpecFile((), ("b", "c"), tuple(props), name)


# --- timeouts -------------------------------------------------------------------


class Timeout(Exception):
    pass


@contextmanager
def time_limit(seconds: float | None):
    if not seconds or not hasattr(signal, "SIGALRM"):
        yield
        return

    def fire(signum, frame):
        raise Timeout(f"time limit of {seconds:g}s exceeded")

    old = signal.signal(signal.SIGALRM, fire)
    signal.setitimer(signal.ITIMER_REAL, seconds)
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, old)


# --- artifacts ------------------------------------------------------------------


def _write(path: str | Path | None, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text if text.endswith("\n") else text + "\n")


def _dot(dot_dir: str | None, name: str, text: str) -> None:
    if dot_dir:
        d = Path(dot_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{name}.dot").write_text(text)


def repair_to_dict(system: TransitionSystem, ops, repaired: TransitionSystem) -> dict:
    chl, rdt = split_counts(ops)
    return {
        "operations": [op_to_dict(op, system.alphabet) for op in sorted_ops(ops)],
        "size": len(ops),
        "chL": chl,
        "rdT": rdt,
        "original": json.loads(to_json(system)),
        "repaired": json.loads(to_json(repaired)),
    }


def repair_from_dict(data: dict, alphabet: AtomicAlphabet) -> frozenset:
    return frozenset(op_from_dict(d, alphabet) for d in data["operations"])


def trace_edges(system: TransitionSystem, word) -> set[tuple[int, int]]:
    """(state, input) pairs visited by ``word`` in ``system`` up to its first repetition."""
    a = system.alphabet
    marked = set()
    t, p, seen = 0, 0, set()
    while (t, p) not in seen:
        seen.add((t, p))
        i = a.input_index(word[p] & set(a.inputs))
        marked.add((t, i))
        t, p = system.tau[t][i], word.successor(p)
    return marked


def explanation_frames(expl: Explanation) -> list[str]:
    frames = []
    for k, step in enumerate(expl.steps):
        before = expl.system_before(k)
        frames.append(to_dot(before, f"step{k + 1}", trace_edges(before, step.counterexample)))
    return frames


def _highest_state(op) -> int:
    return op.state if isinstance(op, LabelChange) else max(op.source, op.target)


def _budget(system: TransitionSystem, budget: int | None) -> TransitionSystem:
    n = budget if budget is not None else system.n + 2
    if n < system.n:
        raise InputError(f"budget {n} is smaller than the system ({system.n} states)")
    return extend_states(system, n)


# --- commands -------------------------------------------------------------------


def cmd_synth(args) -> int:
    spec = load_spec(args.spec)
    if args.bound < 1:
        raise InputError("--bound must be at least 1")
    system = synthesize(spec.formula(), args.bound, spec.alphabet, args.solver)
    if system is None:
        print(f"unrealizable at bound {args.bound}", file=sys.stderr)
        return EXIT_NEGATIVE
    _write(args.json_out, to_json(system))
    _dot(args.dot_out, "synthesized", to_dot(system, "synthesized"))
    return EXIT_OK


def cmd_repair(args) -> int:
    spec = load_spec(args.spec)
    system = _budget(load_system(args.system), args.budget)
    _same_alphabet(system, spec)
    f = spec.formula()
    ops = repair(system, f, args.k, args.solver) if args.k is not None else minimal_repair(system, f, args.solver)
    if ops is None:
        print(f"no repair within budget {system.n}" + (f" and {args.k} operations" if args.k is not None else ""),
              file=sys.stderr)
        return EXIT_NEGATIVE
    repaired = apply_all(system, ops)
    chl, rdt = split_counts(ops)
    print(f"operations: {len(ops)} ({chl} chL / {rdt} rdT)", file=sys.stderr)
    _write(args.json_out, json.dumps(repair_to_dict(system, ops, repaired), indent=2))
    _dot(args.dot_out, "before", to_dot(system, "before"))
    _dot(args.dot_out, "after", to_dot(repaired, "after"))
    return EXIT_OK


def cmd_explain(args) -> int:
    spec = load_spec(args.spec)
    system = load_system(args.system)
    _same_alphabet(system, spec)
    f = spec.formula()
    if args.auto:
        system = _budget(system, args.budget)
        ops = minimal_repair(system, f, args.solver)
        if ops is None:
            print(f"no repair within budget {system.n}", file=sys.stderr)
            return EXIT_NEGATIVE
    elif args.repair:
        data = json.loads(_resolve(args.repair).read_text())
        ops = repair_from_dict(data, system.alphabet)
        needed = max([system.n] + [_highest_state(op) + 1 for op in ops])
        system = extend_states(system, max(needed, args.budget or 0))
        if not is_consistent(ops):
            raise InputError("repair file holds an inconsistent transformation")
    else:
        raise InputError("explain needs a repair file or --auto")
    expl = explanation(system, f, ops, args.kmax, args.solver)
    problems = validate_explanation(expl, ops)
    for p in problems:
        print(f"invalid explanation: {p}", file=sys.stderr)
    _write(args.json_out, expl.to_json())
    for k, frame in enumerate(explanation_frames(expl)):
        _dot(args.dot_out, f"step{k + 1}", frame)
    print(f"steps: {len(expl)}", file=sys.stderr)
    return EXIT_OK if not problems else EXIT_RESOURCE


def cmd_check(args) -> int:
    spec = load_spec(args.spec)
    system = load_system(args.system)
    _same_alphabet(system, spec)
    verdict = model_check(system, spec.formula())
    if verdict.holds:
        print("holds")
        return EXIT_OK
    print(f"fails: {verdict.witness}")
    if args.json_out:
        _write(args.json_out, json.dumps(verdict.witness.to_dict(), indent=2))
    return EXIT_NEGATIVE


def cmd_gen(args) -> int:
    spec = gen_benchmark(args.family, args.n, args.extended)
    _write(args.json_out, json.dumps(spec.to_dict(), indent=2))
    return EXIT_OK


# --- pipeline -----------------------------------------------------------------------

REPORT_FIELDS = (
    "initial_spec", "extended_spec", "initial_size", "budget", "repaired_size",
    "automaton_size", "operations", "chL", "rdT", "justifications", "seconds", "status",
)


@dataclass
class RunReport:
    initial_spec: str
    extended_spec: str
    initial_size: int | None = None
    budget: int | None = None
    repaired_size: int | None = None
    automaton_size: int | None = None
    operations: int | None = None
    chL: int | None = None
    rdT: int | None = None
    justifications: int | None = None
    seconds: float = 0.0
    status: str = "ok"

    def row(self) -> dict:
        d = asdict(self)
        d["seconds"] = f"{self.seconds:.3f}"
        return {k: ("-" if d[k] is None else d[k]) for k in REPORT_FIELDS}


def write_report(path: str, report: RunReport) -> None:
    """Append a CSV row to ``path`` and rewrite ``path`` with suffix ``.md`` as a table."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    rows = []
    if p.exists() and p.stat().st_size:
        with p.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
    rows.append({k: str(v) for k, v in report.row().items()})
    with p.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_FIELDS)
        w.writeheader()
        w.writerows(rows)
    p.with_suffix(".md").write_text(markdown_table(rows))


def markdown_table(rows: list[dict]) -> str:
    out = io.StringIO()
    out.write("| " + " | ".join(REPORT_FIELDS) + " |\n")
    out.write("|" + "---|" * len(REPORT_FIELDS) + "\n")
    for r in rows:
        out.write("| " + " | ".join(str(r[k]) for k in REPORT_FIELDS) + " |\n")
    return out.getvalue()


def run_pipeline(
    initial: SpecFile,
    extended: SpecFile,
    budget: int | None = None,
    initial_system: TransitionSystem | None = None,
    max_bound: int = 8,
    solver: str | None = None,
    out_dir: str | None = None,
    kmax: int | None = None,
) -> tuple[RunReport, int]:
    """Synthesize (or take) an initial system, then repair and explain it for ``extended``."""
    report = RunReport(initial.name, extended.name)
    f_init, f_ext = initial.formula(), extended.formula()
    if initial_system is None:
        for n in range(1, max_bound + 1):
            initial_system = synthesize(f_init, n, initial.alphabet, solver)
            if initial_system is not None:
                break
        else:
            report.status = "unrealizable"
            return report, EXIT_NEGATIVE
    elif initial_system.alphabet != initial.alphabet:
        raise InputError("initial system and specification use different propositions")
    if not model_check(initial_system, f_init):
        raise InputError("initial system does not satisfy the initial specification")
    report.initial_size = initial_system.n
    try:
        system = _budget(lift_alphabet(initial_system, extended.alphabet), budget)
    except SystemShapeError as exc:
        raise InputError(f"extended specification drops propositions: {exc}") from exc
    report.budget = system.n
    ucw = ucw_for(f_ext, extended.alphabet)
    report.automaton_size = ucw.n_states
    ops = minimal_repair(system, f_ext, solver, ucw)
    if ops is None:
        report.status = "no repair"
        return report, EXIT_NEGATIVE
    repaired = apply_all(system, ops)
    report.operations = len(ops)
    report.chL, report.rdT = split_counts(ops)
    report.repaired_size = len(repaired.reachable())
    expl = explanation(system, f_ext, ops, kmax, solver)
    problems = validate_explanation(expl, ops)
    if problems:
        raise ExplanationError("; ".join(problems))
    report.justifications = len(expl)
    if out_dir:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / "initial.json").write_text(to_json(initial_system) + "\n")
        (d / "extended_budget.json").write_text(to_json(system) + "\n")
        (d / "repair.json").write_text(json.dumps(repair_to_dict(system, ops, repaired), indent=2) + "\n")
        (d / "repaired.json").write_text(to_json(repaired) + "\n")
        (d / "explanation.json").write_text(expl.to_json() + "\n")
        (d / "initial_spec.json").write_text(json.dumps(initial.to_dict(), indent=2) + "\n")
        (d / "extended_spec.json").write_text(json.dumps(extended.to_dict(), indent=2) + "\n")
        for k, frame in enumerate(explanation_frames(expl)):
            (d / f"step{k + 1}.dot").write_text(frame)
        (d / "repaired.dot").write_text(to_dot(repaired, "repaired"))
    return report, EXIT_OK


def _spec_arg(text: str) -> SpecFile:
    """A spec file path, shipped fixture, or ``family:n`` / ``family:n:ext`` generator call."""
    if ":" in text and not Path(text).exists():
        family, _, rest = text.partition(":")
        n, _, ext = rest.partition(":")
        try:
            size = int(n)
        except ValueError as exc:
            raise InputError(f"bad generator reference {text!r}") from exc
        return gen_benchmark(family, size, ext == "ext")
    return load_spec(text)


def cmd_pipeline(args) -> int:
    initial = _spec_arg(args.initial)
    extended = _spec_arg(args.extended)
    system = load_system(args.initial_system) if args.initial_system else None
    start = time.monotonic()
    try:
        with time_limit(args.timeout):
            report, code = run_pipeline(
                initial, extended, args.budget, system, args.bound, args.solver, args.json_out, args.kmax
            )
    except Timeout:
        report, code = RunReport(initial.name, extended.name, status="timeout"), EXIT_RESOURCE
    report.seconds = time.monotonic() - start
    if args.report:
        write_report(args.report, report)
    sys.stdout.write(markdown_table([report.row()]))
    return code


# --- argument parsing -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resynth", description="Synthesis, minimal repair and explanation for LTL.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, timeout=True):
        p.add_argument("--solver", default=None, help="'internal' or a DIMACS solver executable")
        p.add_argument("--json-out", default=None)
        p.add_argument("--dot-out", default=None, help="directory for DOT files")
        p.add_argument("--seed", type=int, default=None, help="seed the internal solver")
        if timeout:
            p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="seconds")

    p = sub.add_parser("synth", help="bounded synthesis")
    p.add_argument("spec")
    p.add_argument("-n", "--bound", type=int, required=True)
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("repair", help="minimal repair of a system")
    p.add_argument("system")
    p.add_argument("spec")
    p.add_argument("-N", "--budget", type=int, default=None)
    p.add_argument("--k", type=int, default=None, help="fixed operation bound instead of the minimum")
    common(p)
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("explain", help="explain a repair with counterexamples")
    p.add_argument("system")
    p.add_argument("spec")
    p.add_argument("repair", nargs="?")
    p.add_argument("--auto", action="store_true", help="compute the minimal repair first")
    p.add_argument("-N", "--budget", type=int, default=None)
    p.add_argument("--kmax", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("check", help="model check a system")
    p.add_argument("system")
    p.add_argument("spec")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gen", help="generate a benchmark spec")
    p.add_argument("family", choices=["arbiter", "arbiter_full", "next_chain"])
    p.add_argument("n", type=int)
    p.add_argument("--extended", action="store_true", help="next_chain: the extended variant")
    p.add_argument("--json-out", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("pipeline", help="incremental synthesis, repair and explanation")
    p.add_argument("initial", help="spec file, fixture, or family:n[:ext]")
    p.add_argument("extended", help="spec file, fixture, or family:n[:ext]")
    p.add_argument("--initial-system", default=None)
    p.add_argument("-N", "--budget", type=int, default=None)
    p.add_argument("-n", "--bound", type=int, default=8, help="largest bound tried for the initial system")
    p.add_argument("--kmax", type=int, default=None)
    p.add_argument("--report", default=None, help="CSV file; a Markdown twin is written next to it")
    common(p)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    satcore.set_seed(getattr(args, "seed", None))
    try:
        if args.func is cmd_pipeline:
            return args.func(args)
        with time_limit(getattr(args, "timeout", None)):
            return args.func(args)
    except (InputError, LtlError, SystemShapeError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (Timeout, AutomatonSizeError) as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (satcore.SatError, ExplanationError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    finally:
        satcore.set_seed(None)


if __name__ == "__main__":
    sys.exit(main())
