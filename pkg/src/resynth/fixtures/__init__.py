"""Transcribed example systems and specifications, shipped as JSON.

System fixtures carry ``formulas`` (name -> LTL text) and ``expected``
(formula name -> "holds" | "fails") next to the usual system fields.
Files named ``spec_*.json`` are spec files for the CLI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from ..ltl import Formula, parse_ltl
from ..system import TransitionSystem, from_dict

SYSTEM_FIXTURES = (
    "arb0", "arb1", "arb3", "arb5",
    "arb0_budget4", "arb1_budget4",
    "phi1_system", "phi2_system",
)
SPEC_FIXTURES = ("spec_arbiter2", "spec_arbiter_full2", "spec_phi1", "spec_phi2")


class UnknownFixture(KeyError):
    pass


@dataclass(frozen=True)
class Fixture:
    name: str
    system: TransitionSystem
    formulas: dict[str, Formula] = field(hash=False)
    expected: dict[str, bool] = field(hash=False)
    description: str = ""


def fixture_path(name: str):
    if name not in SYSTEM_FIXTURES and name not in SPEC_FIXTURES:
        raise UnknownFixture(name)
    return resources.files(__name__).joinpath(f"{name}.json")


def fixture_data(name: str) -> dict:
    return json.loads(fixture_path(name).read_text())


def fixture(name: str) -> Fixture:
    if name not in SYSTEM_FIXTURES:
        raise UnknownFixture(name)
    data = fixture_data(name)
    system = from_dict(data)
    formulas = {k: parse_ltl(v, system.alphabet) for k, v in data.get("formulas", {}).items()}
    expected = {k: v == "holds" for k, v in data.get("expected", {}).items()}
    return Fixture(name, system, formulas, expected, data.get("description", ""))
