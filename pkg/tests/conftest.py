import json
import pathlib

import pytest

from multiauto.model import validate_system

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURE_DIR = ROOT / "fixtures"
FIXTURE_NAMES = sorted(p.stem for p in FIXTURE_DIR.glob("*.spec"))


def fixture_path(name: str) -> pathlib.Path:
    return FIXTURE_DIR / f"{name}.spec"


def load_fixture(name: str):
    with open(fixture_path(name)) as fh:
        return validate_system(json.load(fh))


@pytest.fixture(scope="session")
def systems():
    """All committed fixture systems, by name."""
    return {name: load_fixture(name) for name in FIXTURE_NAMES}


def unique_automata(systems):
    """Deduplicated automata across a collection of systems."""
    seen = {}
    for system in systems.values():
        for aut in system.automata:
            seen.setdefault(aut, aut)
    return list(seen)
