"""ln det(I - M) for balanced round-trip blocks."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor

from .core import CasimirError
from .scattering import BalancedMatrix

PIVOT_FLOOR = 1e-300
# Below this Frobenius norm ln det(I - M) = -sum_k tr(M^k)/k is summed
# directly; forming I - M would round away the information when M is tiny.
SERIES_NORM = 0.05


class NonContractionError(CasimirError, ArithmeticError):
    """det(I - M) is not positive: the block is not a contraction."""


@dataclass(frozen=True)
class LogDetReport:
    value: float
    dimension: int
    min_pivot_magnitude: float
    sign_product: int


def _as_array(matrix: BalancedMatrix | np.ndarray) -> np.ndarray:
    if isinstance(matrix, BalancedMatrix):
        return matrix.entries
    return np.asarray(matrix, dtype=float)


def log_det_one_minus(matrix: BalancedMatrix | np.ndarray) -> LogDetReport:
    """ln det(I - M) by LU with partial pivoting.

    Raises NonContractionError when the determinant is not positive or a
    pivot falls below 1e-300.
    """
    m = _as_array(matrix)
    n = m.shape[0]
    if m.ndim != 2 or m.shape[1] != n:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not isinstance(matrix, BalancedMatrix) and not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    norm = float(np.linalg.norm(m))
    if norm < SERIES_NORM:
        return _series_log_det(m, norm)
    a = np.eye(n) - m
    with warnings.catch_warnings():
        # Exactly singular input is reported through the pivot floor below.
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(a, overwrite_a=True, check_finite=False)
    diag = np.diagonal(lu)
    mags = np.abs(diag)
    min_pivot = float(mags.min())
    swaps = int(np.count_nonzero(piv != np.arange(n)))
    sign = (-1) ** swaps * (-1) ** int(np.count_nonzero(diag < 0))
    if min_pivot < PIVOT_FLOOR or sign != 1:
        raise NonContractionError(
            f"det(I - M) not positive (sign {sign}, min pivot {min_pivot:.3e}, d={n})")
    return LogDetReport(value=float(np.sum(np.log(mags))), dimension=n,
                        min_pivot_magnitude=min_pivot, sign_product=int(sign))


def _series_log_det(m: np.ndarray, norm: float) -> LogDetReport:
    n = m.shape[0]
    total = 0.0
    power = m
    k = 1
    while True:
        term = float(np.trace(power)) / k
        total -= term
        # |tr(M^k)| <= ||M||_F^k bounds the remaining terms geometrically.
        if norm ** (k + 1) / ((k + 1) * (1.0 - norm)) <= 1e-17 * abs(total) or norm ** (k + 1) == 0.0:
            break
        power = power @ m
        k += 1
    return LogDetReport(value=total, dimension=n, min_pivot_magnitude=1.0 - norm, sign_product=1)


def spectral_radius_estimate(matrix: BalancedMatrix | np.ndarray, iters: int = 200) -> float:
    """Power-iteration estimate of the spectral radius.

    Returns the Rayleigh quotient of the last iterate, which bounds the
    spectral radius from below for the symmetric blocks built here.
    """
    m = _as_array(matrix)
    n = m.shape[0]
    v = np.random.default_rng(12345).standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(max(1, int(iters))):
        w = m @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
    return float(abs(v @ (m @ v)))
