"""Log-domain factorials and friends.

Matrix elements at multipole orders of several thousand involve factorials
far beyond the double range, so everything here returns natural logarithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .core import DomainError

_MAX_N = 10**6
_EXACT_N = 20
_EXACT_TABLE = tuple(math.log(math.factorial(n)) for n in range(_EXACT_N + 1))


@dataclass(frozen=True)
class LogValue:
    """A real number stored as ``sign * exp(log_magnitude)``."""

    sign: int
    log_magnitude: float = 0.0

    @classmethod
    def zero(cls) -> LogValue:
        return cls(0, -math.inf)

    @classmethod
    def from_float(cls, value: float) -> LogValue:
        if value == 0.0:
            return cls.zero()
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    def __mul__(self, other: LogValue) -> LogValue:
        if self.sign == 0 or other.sign == 0:
            return LogValue.zero()
        return LogValue(self.sign * other.sign, self.log_magnitude + other.log_magnitude)

    def __neg__(self) -> LogValue:
        return LogValue(-self.sign, self.log_magnitude)

    def scale_log(self, delta: float) -> LogValue:
        """Multiply the magnitude by ``exp(delta)``."""
        if self.sign == 0:
            return self
        return LogValue(self.sign, self.log_magnitude + delta)

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_magnitude)

    @property
    def is_zero(self) -> bool:
        return self.sign == 0


def _check_n(n: int) -> int:
    if isinstance(n, bool) or int(n) != n:
        raise DomainError(f"expected an integer, got {n!r}")
    n = int(n)
    if n < 0 or n > _MAX_N:
        raise DomainError(f"argument {n} outside [0, {_MAX_N}]")
    return n


def log_factorial(n: int) -> float:
    """ln(n!) for 0 <= n <= 10**6."""
    n = _check_n(n)
    if n <= _EXACT_N:
        return _EXACT_TABLE[n]
    return math.lgamma(n + 1.0)


def log_double_factorial(n: int) -> float:
    """ln(n!!) with 0!! = 1!! = 1."""
    n = _check_n(n)
    if n <= 50:
        return math.log(math.prod(range(n, 0, -2)))
    k = n // 2
    if n % 2 == 0:
        # (2k)!! = 2^k k!
        return k * math.log(2.0) + log_factorial(k)
    # (2k+1)!! = (2k+1)! / (2^k k!)
    return log_factorial(n) - k * math.log(2.0) - log_factorial(k)


def log_binomial(n: int, k: int) -> float:
    n = _check_n(n)
    k = _check_n(k)
    if k > n:
        raise DomainError(f"binomial requires k <= n, got n={n}, k={k}")
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k)


@lru_cache(maxsize=8)
def _table(size: int) -> np.ndarray:
    table = gammaln(np.arange(size, dtype=float) + 1.0)
    table[: _EXACT_N + 1] = _EXACT_TABLE
    table.setflags(write=False)
    return table


def log_factorial_table(n_max: int) -> np.ndarray:
    """Read-only array with ``ln(n!)`` for ``n = 0..n_max``.

    Sizes are rounded up to a power of two so repeated calls with growing
    cutoffs hit the cache.
    """
    n_max = _check_n(n_max)
    size = 1 << max(6, (n_max + 1 - 1).bit_length())
    return _table(size)[: n_max + 1]
