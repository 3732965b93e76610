from __future__ import annotations

from pathlib import Path

import pytest

from dramatis import parse_script_file

REPO = Path(__file__).resolve().parent.parent
FIXTURE_SCRIPT = REPO / "src" / "dramatis" / "examples" / "drunk_keys.drama"
DATA = Path(__file__).resolve().parent / "data"
TRACES = DATA / "traces"
GOLDEN = DATA / "golden"


@pytest.fixture(scope="session")
def fixture_path() -> Path:
    return FIXTURE_SCRIPT


@pytest.fixture()
def doc():
    return parse_script_file(FIXTURE_SCRIPT)


@pytest.fixture(scope="session")
def fixture_source() -> str:
    return FIXTURE_SCRIPT.read_text(encoding="utf-8")
