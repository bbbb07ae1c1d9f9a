"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

The link-level criteria share one run cache, so the module takes several
minutes on a single core.
"""

import pytest

from pnlink.acceptance import CRITERIA, RunCache


@pytest.fixture(scope="module")
def cache():
    return RunCache()


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, cache, capsys):
    result = CRITERIA[number](cache)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.detail
