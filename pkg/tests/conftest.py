import json
import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from talenti import fem  # noqa: E402
from talenti.comparison import compare_fem  # noqa: E402

REGRESSION = json.loads((Path(__file__).parent / "regression_values.json").read_text())

ACCEPTANCE_RESULTS = {}


@pytest.fixture(scope="session")
def regression():
    return REGRESSION


@pytest.fixture(scope="session")
def disk_report():
    return compare_fem(fem.Disk(1.0), 1.0, 2.0, 0.05, name="disk")


@pytest.fixture(scope="session")
def square_report():
    return compare_fem(fem.Square(1.0), 1.0, 2.0, 0.05, name="square")


@pytest.fixture(scope="session")
def quarter_sector_report():
    return compare_fem(fem.Sector(1.0, math.pi / 2), 1.0, 2.0, 0.05, name="sector")


@pytest.fixture(scope="session")
def acceptance():
    return ACCEPTANCE_RESULTS


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        status, title, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key:2d}  {status}  {title}  ({detail})")
