import math
import random

import pytest

from classical_casimir.core import DomainError
from classical_casimir.specfun import (
    LogValue,
    log_binomial,
    log_double_factorial,
    log_factorial,
    log_factorial_table,
)
from oracles import exact_log_binomial, exact_log_double_factorial, exact_log_factorial

# ln(170!) from the exact big-integer factorial.
LOG_FACT_170 = exact_log_factorial(170)


def test_log_factorial_examples():
    assert log_factorial(0) == 0.0
    assert log_factorial(5) == pytest.approx(4.787491742782046, rel=1e-15)
    assert LOG_FACT_170 == pytest.approx(706.5731, abs=1e-4)
    assert log_factorial(170) == pytest.approx(LOG_FACT_170, rel=1e-13)


def test_log_double_factorial_examples():
    assert log_double_factorial(0) == 0.0
    assert log_double_factorial(1) == 0.0
    assert log_double_factorial(5) == pytest.approx(2.70805020110221, rel=1e-14)
    assert log_double_factorial(301) == pytest.approx(exact_log_double_factorial(301), rel=1e-13)
    assert log_double_factorial(300) == pytest.approx(exact_log_double_factorial(300), rel=1e-13)


def test_log_binomial_examples():
    assert log_binomial(6, 3) == pytest.approx(math.log(20), rel=1e-15)
    assert log_binomial(10, 0) == 0.0
    assert log_binomial(4000, 2000) == pytest.approx(exact_log_binomial(4000, 2000), rel=1e-13)
    with pytest.raises(DomainError):
        log_binomial(3, 4)


@pytest.mark.parametrize("bad", [-1, 10**6 + 1, 2.5])
def test_domain(bad):
    with pytest.raises(DomainError):
        log_factorial(bad)


def test_pascal_identity():
    for n in range(2, 61):
        for k in range(1, n):
            lhs = math.exp(log_binomial(n, k))
            rhs = math.exp(log_binomial(n - 1, k)) + math.exp(log_binomial(n - 1, k - 1))
            assert lhs == pytest.approx(rhs, rel=1e-12)


def test_monotone():
    values = [log_factorial(n) for n in range(1, 3000)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_oracle_agreement_random():
    rng = random.Random(7)
    for n in (rng.randint(0, 5000) for _ in range(200)):
        exact = exact_log_factorial(n)
        assert log_factorial(n) == pytest.approx(exact, rel=1e-13, abs=1e-300)


def test_table_matches_scalar():
    table = log_factorial_table(3000)
    assert len(table) == 3001
    for n in (0, 1, 20, 21, 500, 3000):
        assert table[n] == pytest.approx(log_factorial(n), rel=1e-14, abs=0)


def test_log_value_algebra():
    a = LogValue.from_float(-2.0)
    b = LogValue.from_float(0.25)
    assert float(a * b) == pytest.approx(-0.5)
    assert (a * LogValue.zero()).is_zero
    assert float(-a) == 2.0
    assert float(b.scale_log(math.log(4))) == pytest.approx(1.0)
