import pytest

from expobif.verify import CRITERIA, run_criterion


@pytest.mark.parametrize("number", [k for k, _, _ in CRITERIA], ids=[f"c{k:02d}_{n.replace(' ', '_')}" for k, n, _ in CRITERIA])
def test_criterion(number):
    res = run_criterion(number)
    print()
    print(res.line())
    assert res.passed, res.detail
