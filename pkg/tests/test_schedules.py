import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from parhybrid.schedules import ScheduleSyntaxError, parse_schedule


def test_formula_examples():
    assert parse_schedule(0.2)(7) == 0.2
    assert parse_schedule("1/(n+2)")(0) == 0.5
    assert parse_schedule("1 + 1/(n+1)**2")(1) == 1.25
    assert parse_schedule("min(0.95, 1/log(log(n+10)))")(0) == 0.95
    assert parse_schedule("log(n+2)/(n+2)")(0) == pytest.approx(math.log(2) / 2)
    assert parse_schedule(" -n + 3 ")(1) == 2.0


@pytest.mark.parametrize(
    "text", ["__import__('os')", "n.real", "x + 1", "lambda: 1", "1 if n else 2", "log(n, base=2)", "(", "True"]
)
def test_rejects_anything_else(text):
    with pytest.raises(ScheduleSyntaxError):
        parse_schedule(text)


def test_rejects_boolean():
    with pytest.raises(ScheduleSyntaxError):
        parse_schedule(True)


@given(st.integers(0, 10**6))
def test_formula_matches_python(n):
    f = parse_schedule("sqrt(n+1) * exp(-n/1000) + abs(-2) ** 2")
    assert f(n) == math.sqrt(n + 1) * math.exp(-n / 1000) + abs(-2) ** 2
