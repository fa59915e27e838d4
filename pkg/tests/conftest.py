from importlib import resources

import pytest

from viewsdb import ViewsDB, loads


def fixture_text(name):
    return resources.files("viewsdb").joinpath("data", name).read_text(encoding="utf-8")


def named(db):
    """name -> address for a database loaded from text."""
    return {n: a for a, n in db.names.items()}


@pytest.fixture
def db():
    return ViewsDB()


@pytest.fixture
def felidae():
    return loads(fixture_text("felidae.views"))


@pytest.fixture
def tom_hanks():
    return loads(fixture_text("tom_hanks.views"))


@pytest.fixture
def three_node():
    return loads(fixture_text("three_node_slipnet.views"))


# Acceptance results, filled in by test_acceptance.py and echoed in the summary.
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, label = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {label}")
