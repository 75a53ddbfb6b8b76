"""The twelve acceptance criteria, one test each.

Full size by default (about 15 minutes on one core); set HNLSLAB_REDUCED=1
for the capped quick variant.  Each criterion prints one PASS/FAIL line,
repeated in the terminal summary.
"""

import json
import os

import pytest

from hnlslab.acceptance import CRITERIA, run_criterion

REDUCED = os.environ.get("HNLSLAB_REDUCED", "") not in ("", "0")
SEED = int(os.environ.get("HNLSLAB_SEED", "0"))
LINES: list = []


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    res = run_criterion(number, seed=SEED, reduced=REDUCED)
    LINES.append(res.line())
    print(res.line())
    assert res.passed, json.dumps(res.details, default=str, indent=1)
