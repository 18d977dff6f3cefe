from __future__ import annotations

import pytest

import oracles
from odp_cba.pipeline import Run


@pytest.fixture(scope="session")
def oracle():
    return oracles.load()


@pytest.fixture(scope="session")
def run():
    """Default fixture-mode run, shared across tests (stages are cached)."""
    return Run()


@pytest.fixture(scope="session")
def formula_run():
    r = Run()
    return Run(r.config.override(mode="formula"))


ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
