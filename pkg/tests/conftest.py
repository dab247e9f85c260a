import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dyrecmul.datapath import DyRecMul  # noqa: E402
from dyrecmul.errorlab import sweep  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def signed_report():
    return sweep("signed", DyRecMul("signed"))


@pytest.fixture(scope="session")
def unsigned_report():
    return sweep("unsigned", DyRecMul("unsigned"))


@pytest.fixture
def golden():
    return GOLDEN


# acceptance criterion -> (passed, detail), filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
