from __future__ import annotations

from pathlib import Path

import pytest

from dualtrace.lexicon import load_lexicon

FIXTURES = Path(__file__).parent / "fixtures"

_acceptance: dict[str, str] = {}


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon()


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance[report.nodeid.split("::")[-1]] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and report.failed and "test_acceptance.py" in report.nodeid:
        _acceptance[report.nodeid.split("::")[-1]] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance, key=lambda n: int(n.split("_")[2])):
        terminalreporter.write_line(f"{_acceptance[name]}  {name}")
