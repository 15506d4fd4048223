import json
from pathlib import Path

import pytest

from rallyvis.pipeline import build_bundle
from rallyvis.tracking import load_dataset

_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    _ACCEPTANCE_RESULTS.append((name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS:
        label = name.replace("test_", "", 1)
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {label}")

FIXTURES = Path(__file__).parent / "fixtures"
GOLDENS = Path(__file__).parent / "goldens"


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def load_fixture_json(name: str) -> dict:
    return json.loads(fixture_path(name).read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def rally_dataset():
    return load_dataset(fixture_path("rally300.json"))


@pytest.fixture(scope="session")
def rally_doc():
    return load_fixture_json("rally300.json")


@pytest.fixture(scope="session")
def rally_bundle(rally_doc):
    return build_bundle(rally_doc)


@pytest.fixture(scope="session")
def fixture_meta():
    return load_fixture_json("fixture_meta.json")
