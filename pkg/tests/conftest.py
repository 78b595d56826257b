import os
import stat
import sys
from pathlib import Path

import pytest

# every Sat answer in the test run is checked against the clause set
os.environ.setdefault("RESYNTH_VERIFY_MODELS", "1")
os.environ.pop("RESYNTH_SOLVER", None)
sys.path.insert(0, str(Path(__file__).parent))

HERE = Path(__file__).parent


@pytest.fixture(scope="session")
def external_solver(tmp_path_factory):
    """Path of an executable DIMACS solver wrapping python-sat."""
    pytest.importorskip("pysat")
    path = tmp_path_factory.mktemp("solver") / "pysat-solver"
    path.write_text(f'#!/bin/sh\nexec "{sys.executable}" "{HERE / "pysat_solver.py"}" "$@"\n')
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return str(path)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
