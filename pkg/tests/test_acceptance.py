"""The ten acceptance criteria, one test each.

Every test prints a single ``[PASS]`` or ``[FAIL]`` line; the lines are
repeated in an "acceptance criteria" section at the end of the pytest
report.  ``python3 -m sobopatch.acceptance`` runs the same suite outside
pytest.
"""

from __future__ import annotations

import pytest

from sobopatch.acceptance import CRITERIA


@pytest.mark.parametrize("crit", CRITERIA, ids=[c.__name__ for c in CRITERIA])
def test_criterion(crit, acceptance_lines):
    res = crit(seed=0) if crit.takes_seed else crit()
    line = res.line()
    acceptance_lines.append(line)
    print(line)
    assert res.passed, line
