"""Shared test setup: oracle imports and the acceptance summary."""

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# criterion number -> (title, passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """``criterion(n, title, passed, detail)`` records one acceptance verdict."""

    def record(n, title, passed, detail=""):
        ACCEPTANCE[n] = (title, bool(passed), detail)
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {title}  [{detail}]")
