"""Every acceptance criterion at its stated tolerance; one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-check values.
"""
import pytest

from tamedsurf.acceptance import CRITERIA, Bench


@pytest.fixture(scope="module")
def bench():
    return Bench(resolution=256, slack=0.05)


@pytest.mark.slow
@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{k + 1}" for k in range(len(CRITERIA))])
def test_criterion(bench, criterion, capsys):
    result = criterion(bench)
    with capsys.disabled():
        print("\n" + result.report())
    assert result.passed, result.line()
