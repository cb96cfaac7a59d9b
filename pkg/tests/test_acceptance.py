"""Acceptance criteria 1-13, one PASS/FAIL line each (visible with -s or in the -v log)."""

import pytest

from lamelab.acceptance import CHECKS, run_check


@pytest.mark.parametrize("number", sorted(CHECKS))
def test_criterion(number):
    res = run_check(number)
    print(res.line())
    assert res.passed, res.line()
