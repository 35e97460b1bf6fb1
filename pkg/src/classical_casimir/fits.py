"""Least-squares fits of beta(x) with three four-parameter trial bases."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import CasimirError, DomainError


class DegenerateFitError(CasimirError, ArithmeticError):
    """Too few distinct abscissae to determine the fit parameters."""


class Basis(enum.Enum):
    LOG_POLY = "LogPoly"   # 1, ln x, ln^2 x, ln^3 x
    X_POLY = "XPoly"       # 1, x, x^2, x^3
    MIXED = "Mixed"        # 1, ln x, x, x^2

    @classmethod
    def parse(cls, value: str | Basis) -> Basis:
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value.lower() == str(value).lower() or member.name.lower() == str(value).lower():
                return member
        raise DomainError(f"unknown basis {value!r}")


N_PARAMS = 4


def design_matrix(basis: Basis, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    t = np.log(x)
    one = np.ones_like(x)
    if basis is Basis.LOG_POLY:
        cols = (one, t, t**2, t**3)
    elif basis is Basis.X_POLY:
        cols = (one, x, x**2, x**3)
    else:
        cols = (one, t, x, x**2)
    return np.column_stack(cols)


@dataclass(frozen=True)
class BetaSample:
    x: float
    beta: float
    weight: float = 1.0
    error_estimate: float | None = None

    def __post_init__(self) -> None:
        if not self.x > 0:
            raise DomainError(f"sample abscissa must be positive, got {self.x!r}")

    @property
    def ln_x(self) -> float:
        return math.log(self.x)


@dataclass(frozen=True)
class FitSpec:
    basis: Basis
    window: tuple[float, float]

    def __post_init__(self) -> None:
        lo, hi = self.window
        if not lo < hi:
            raise DomainError(f"window must satisfy lo < hi, got {self.window}")


@dataclass(frozen=True)
class FitResult:
    spec: FitSpec
    coefficients: tuple[float, float, float, float]
    rms_in_window: float
    n_in_window: int
    condition_indicator: float
    rms_out_window: dict[tuple[float, float], float] = field(default_factory=dict)


def _in_window(samples: Sequence[BetaSample], window: tuple[float, float]) -> list[BetaSample]:
    lo, hi = window
    # Tolerate round-off at the window edges.
    eps = 1e-12 * max(1.0, abs(lo), abs(hi))
    return [s for s in samples if lo - eps <= s.ln_x <= hi + eps]


def _raw_coefficients(basis: Basis, centred: np.ndarray, shift_t: float, shift_x: float) -> np.ndarray:
    """Map coefficients of the centred basis back to powers of ln x / x."""
    if basis is Basis.MIXED:
        c0, c1, c2, c3 = centred
        # c1 (t - st) + c2 (x - sx) + c3 (x - sx)^2
        return np.array([
            c0 - c1 * shift_t - c2 * shift_x + c3 * shift_x**2,
            c1,
            c2 - 2.0 * c3 * shift_x,
            c3,
        ])
    shift = shift_t if basis is Basis.LOG_POLY else shift_x
    raw = np.zeros(N_PARAMS)
    for k, ck in enumerate(centred):
        for j in range(k + 1):
            raw[j] += ck * math.comb(k, j) * (-shift) ** (k - j)
    return raw


def _rms(residuals: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sqrt(np.sum(weights * residuals**2) / np.sum(weights)))


def fit_beta(samples: Iterable[BetaSample], spec: FitSpec, weighted: bool = False) -> FitResult:
    """Weighted linear least squares on the samples inside ``spec.window``.

    Abscissae are centred and columns scaled before a QR solve; the
    returned coefficients refer to the plain bases. With ``weighted=True``
    samples carrying an error estimate get weight 1/error^2.
    """
    samples = list(samples)
    inside = _in_window(samples, spec.window)
    if not inside:
        raise DomainError(f"no samples inside window {spec.window}")
    distinct = len({round(s.ln_x, 12) for s in inside})
    if distinct < N_PARAMS or len(inside) < N_PARAMS + 1:
        raise DegenerateFitError(
            f"{spec.basis.value} needs at least {N_PARAMS + 1} samples with {N_PARAMS} distinct "
            f"abscissae, got {len(inside)} samples / {distinct} distinct")

    x = np.array([s.x for s in inside])
    y = np.array([s.beta for s in inside])
    if weighted:
        w = np.array([1.0 / s.error_estimate**2 if s.error_estimate else s.weight for s in inside])
    else:
        w = np.array([s.weight for s in inside])

    t = np.log(x)
    shift_t = float(np.mean(t))
    shift_x = float(np.mean(x))
    tc = t - shift_t
    xc = x - shift_x
    one = np.ones_like(x)
    if spec.basis is Basis.LOG_POLY:
        a = np.column_stack((one, tc, tc**2, tc**3))
    elif spec.basis is Basis.X_POLY:
        a = np.column_stack((one, xc, xc**2, xc**3))
    else:
        a = np.column_stack((one, tc, xc, xc**2))

    sw = np.sqrt(w)
    aw = a * sw[:, None]
    scale = np.linalg.norm(aw, axis=0)
    scale[scale == 0.0] = 1.0
    q, r = np.linalg.qr(aw / scale)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-13 * diag.max():
        raise DegenerateFitError(f"{spec.basis.value} design matrix is rank deficient")
    centred = np.linalg.solve(r, q.T @ (y * sw)) / scale
    sv = np.linalg.svd(r, compute_uv=False)
    coefficients = _raw_coefficients(spec.basis, centred, shift_t, shift_x)

    residuals = a @ centred - y
    return FitResult(spec=spec, coefficients=tuple(float(c) for c in coefficients),
                     rms_in_window=_rms(residuals, w), n_in_window=len(inside),
                     condition_indicator=float((sv[0] / sv[-1]) ** 2))


def evaluate_fit(fit: FitResult, x: float | np.ndarray) -> float | np.ndarray:
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise DomainError("fits are defined for x > 0 only")
    value = design_matrix(fit.spec.basis, np.atleast_1d(xa)) @ np.array(fit.coefficients)
    return float(value[0]) if xa.ndim == 0 else value


def rms_on_window(fit: FitResult, samples: Sequence[BetaSample], window: tuple[float, float]) -> float:
    inside = _in_window(samples, window)
    if not inside:
        raise DomainError(f"no samples inside evaluation window {window}")
    x = np.array([s.x for s in inside])
    y = np.array([s.beta for s in inside])
    w = np.array([s.weight for s in inside])
    return _rms(evaluate_fit(fit, x) - y, w)


@dataclass(frozen=True)
class FitComparison:
    fit_window: tuple[float, float]
    eval_window: tuple[float, float]
    fits: tuple[FitResult, ...]

    @property
    def order(self) -> tuple[Basis, ...]:
        return tuple(f.spec.basis for f in self.fits)

    def rms_out(self, fit: FitResult) -> float:
        return fit.rms_out_window[self.eval_window]


def compare_fits(samples: Iterable[BetaSample], fit_window: tuple[float, float],
                 eval_window: tuple[float, float], weighted: bool = False) -> FitComparison:
    """Fit every basis on ``fit_window``; sort by RMS residual on ``eval_window``."""
    samples = list(samples)
    fit_window = (float(fit_window[0]), float(fit_window[1]))
    eval_window = (float(eval_window[0]), float(eval_window[1]))
    results = []
    for basis in Basis:
        fit = fit_beta(samples, FitSpec(basis, fit_window), weighted=weighted)
        fit.rms_out_window[eval_window] = rms_on_window(fit, samples, eval_window)
        results.append(fit)
    results.sort(key=lambda f: f.rms_out_window[eval_window])
    return FitComparison(fit_window=fit_window, eval_window=eval_window, fits=tuple(results))


def log_spaced(window: tuple[float, float], points: int) -> np.ndarray:
    """``points`` abscissae x uniform in ln x over ``window`` (endpoints included)."""
    if points < 1:
        raise DomainError("points must be positive")
    lo, hi = window
    if points == 1:
        return np.array([math.exp(0.5 * (lo + hi))])
    return np.exp(np.linspace(lo, hi, points))
