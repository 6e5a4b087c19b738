"""The ten acceptance criteria at their stated tolerances.

Each test prints one [PASS]/[FAIL] line; the lines are also collected into a
summary section at the end of the pytest run.
"""

import pytest

from conftest import ACCEPTANCE_LINES
from sphereppw.acceptance import CRITERIA, run_criterion

MESH_CRITERIA = {9, 10}


@pytest.mark.parametrize(
    "number",
    [pytest.param(k, marks=pytest.mark.slow) if k in MESH_CRITERIA else k
     for k in range(1, len(CRITERIA) + 1)],
    ids=lambda k: f"criterion_{k:02d}",
)
def test_criterion(number):
    result = run_criterion(number)
    line = result.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, "\n".join(result.failures)
