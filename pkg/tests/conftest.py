import json
from pathlib import Path

import pytest

from parsingdst import load_domain_examples, load_ontology, load_templates
from parsingdst.backend import ReplayBackend

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def ontology():
    return load_ontology()


@pytest.fixture(scope="session")
def examples(ontology):
    return load_domain_examples(ontology)


@pytest.fixture(scope="session")
def templates():
    return load_templates()


@pytest.fixture(scope="session")
def rejected_hotel_turns():
    return [tuple(t) for t in json.loads((FIXTURES / "rejected_hotel_turns.json").read_text())]


@pytest.fixture(scope="session")
def rejected_hotel_backend():
    return ReplayBackend(FIXTURES / "rejected_hotel_fixtures.ndjson")


@pytest.fixture(scope="session")
def mini_backend():
    return ReplayBackend(FIXTURES / "mini_fixtures.ndjson")


@pytest.fixture
def write_json(tmp_path):
    def _write(name, obj):
        path = tmp_path / name
        path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
        return path
    return _write


ACCEPTANCE_LINES = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when != "call" and not (report.when == "setup" and report.skipped):
        return
    name = report.nodeid.split("::")[-1]
    status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
    ACCEPTANCE_LINES.append(f"{status}  {name}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
