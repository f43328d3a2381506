"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run directly (``python tests/test_acceptance.py``) to print the table
without pytest, or through pytest, where the lines are repeated in the
terminal summary.
"""

import pytest

from adx.acceptance import CHECKS

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("ident", range(1, len(CHECKS) + 1), ids=lambda i: f"criterion{i:02d}")
def test_criterion(ident):
    res = CHECKS[ident - 1]()
    ACCEPTANCE_LINES.append(res.line())
    print(res.line())
    assert res.passed, res.detail


if __name__ == "__main__":
    results = [check() for check in CHECKS]
    for r in results:
        print(r.line(), flush=True)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
