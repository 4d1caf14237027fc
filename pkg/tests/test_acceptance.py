import pytest

from coinrt.acceptance import CRITERIA

RESULTS: dict = {}


@pytest.mark.parametrize("code", list(CRITERIA))
def test_criterion(code):
    result = CRITERIA[code]()
    RESULTS[code] = result
    print(result.line())
    assert result.checks > 0
    assert result.passed, result.failures[:5]
