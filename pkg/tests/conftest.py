from __future__ import annotations

import pytest

from zlab.direct_product import JoinCompactification
from zlab.free_product import FreeProductSpace


@pytest.fixture(scope="session")
def space():
    return FreeProductSpace()


@pytest.fixture(scope="session")
def join():
    return JoinCompactification()


ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
