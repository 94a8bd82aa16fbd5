import json
from pathlib import Path

import pytest

from archdesk import kb as kbmod, speclang

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

EXAMPLE_SPEC = (FIXTURES / "example_spec.qk").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def kb_doc():
    return json.loads((FIXTURES / "example_kb.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def exkb():
    return kbmod.load_kb_file(str(FIXTURES / "example_kb.json"))


@pytest.fixture(scope="session")
def spec31(exkb):
    """The worked DBMS-selection spec, bound against the example KB."""
    return speclang.bind_spec(speclang.parse_spec(EXAMPLE_SPEC), exkb)


@pytest.fixture(scope="session")
def empty_spec(exkb):
    return speclang.bind_spec(speclang.parse_spec(""), exkb)


@pytest.fixture()
def kb_path():
    return str(FIXTURES / "example_kb.json")


@pytest.fixture()
def spec_path():
    return str(FIXTURES / "example_spec.qk")
