"""Assembly of Phi(x) and the derived PFA-deviation observables."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

from .core import (
    CasimirError,
    Channel,
    Geometry,
    MirrorModel,
    SolverConfig,
    ThermalOutput,
    geometry_from_x,
    pfa_constant,
)
from .linalg import log_det_one_minus
from .scattering import balance, build_channel_matrix

log = logging.getLogger(__name__)


class UnconvergedError(CasimirError, ArithmeticError):
    """The multipole cutoff budget was exhausted before convergence."""

    def __init__(self, message: str, partial: PhiResult | None = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class PhiResult:
    x: float
    model: MirrorModel
    phi: float
    per_m_terms: tuple[tuple[int, Channel, float], ...]
    ell_max_used: int
    m_max_used: int
    convergence_estimate: float | None


@dataclass(frozen=True)
class RhoBeta:
    x: float
    model: MirrorModel
    rho: float
    beta: float
    beta_log_slope: float | None
    error_estimate: float | None

    @property
    def beta_error(self) -> float | None:
        """Absolute error of beta implied by the error on rho."""
        if self.error_estimate is None:
            return None
        return self.error_estimate / self.x


def _block_log_det(geometry: Geometry, channel: Channel, m: int, ell_max: int) -> float:
    # The electric block is model independent; PERFECT admits both channels.
    block = build_channel_matrix(geometry, MirrorModel.PERFECT, channel, m, ell_max)
    return log_det_one_minus(balance(block)).value


def _m_weight(m: int) -> int:
    return 1 if m == 0 else 2


def _sweep(geometry: Geometry, channel: Channel, ell_max: int, m_rel_tol: float,
           workers: int) -> tuple[tuple[int, float], ...]:
    """Blocks m = 0, 1, ... until two consecutive terms fall below tolerance.

    Blocks are evaluated in batches of ``workers``; the termination test and
    the reduction always run in ascending m so the result does not depend
    on the worker count.
    """
    terms: list[tuple[int, float]] = []
    total = 0.0
    quiet = 0
    m = 0
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while m <= ell_max:
            batch = list(range(m, min(ell_max, m + workers - 1) + 1))
            if pool is None:
                values = [_block_log_det(geometry, channel, k, ell_max) for k in batch]
            else:
                values = list(pool.map(
                    lambda k: _block_log_det(geometry, channel, k, ell_max), batch))
            for k, value in zip(batch, values):
                term = _m_weight(k) * value
                terms.append((k, value))
                total += term
                quiet = quiet + 1 if abs(term) < m_rel_tol * abs(total) else 0
                if quiet >= 2:
                    return tuple(terms)
            m = batch[-1] + 1
    finally:
        if pool is not None:
            pool.shutdown()
    return tuple(terms)


@lru_cache(maxsize=512)
def _channel_terms(x: float, channel: Channel, ell_max: int, m_rel_tol: float,
                   workers: int) -> tuple[tuple[int, float], ...]:
    # Keyed on x only: the blocks depend on the geometry through z = 1/(1+x).
    return _sweep(geometry_from_x(x), channel, ell_max, m_rel_tol, workers)


def channel_terms(geometry: Geometry, channel: Channel, ell_max: int,
                  config: SolverConfig) -> tuple[tuple[int, float], ...]:
    """(m, ln det(I - M_m)) pairs for one channel at fixed cutoff."""
    return _channel_terms(geometry.x, channel, int(ell_max), config.m_rel_tol,
                          int(config.worker_count))


def _phi_at(geometry: Geometry, model: MirrorModel, ell_max: int,
            config: SolverConfig) -> tuple[float, list[tuple[int, Channel, float]]]:
    total = 0.0
    per_m = []
    for channel in model.channels:
        for m, value in channel_terms(geometry, channel, ell_max, config):
            total += _m_weight(m) * value
            per_m.append((m, channel, value))
    return -0.5 * total, per_m


def _check_decay(per_m: list[tuple[int, Channel, float]]) -> None:
    for channel in {c for _, c, _ in per_m}:
        mags = [abs(v) for _, c, v in per_m if c is channel]
        bad = [m for m in range(3, len(mags)) if mags[m] >= mags[m - 1] and mags[m] > 0]
        if bad:
            log.warning("non-monotone m-terms for %s channel at m=%s", channel.value, bad[:5])


def phi(geometry: Geometry, model: MirrorModel | str,
        config: SolverConfig | None = None) -> PhiResult:
    """Phi = -1/2 sum_channel sum_m w_m ln det(I - M_m), w_0 = 1, w_m>0 = 2.

    Without an ``ell_max_override`` the cutoff ``ceil(eta/x)`` is doubled
    until the relative change of Phi drops below ``refine_tol``; the finer
    result is returned.
    """
    model = MirrorModel.parse(model)
    config = config or SolverConfig()
    ell_max = config.initial_ell_max(geometry.x)

    if config.ell_max_override is not None:
        value, per_m = _phi_at(geometry, model, ell_max, config)
        _check_decay(per_m)
        return PhiResult(x=geometry.x, model=model, phi=value, per_m_terms=tuple(per_m),
                         ell_max_used=ell_max, m_max_used=max(m for m, _, _ in per_m),
                         convergence_estimate=None)

    coarse, _ = _phi_at(geometry, model, ell_max, config)
    while True:
        fine_ell = 2 * ell_max
        if fine_ell > config.ell_max_budget:
            _, per_m = _phi_at(geometry, model, ell_max, config)
            partial = PhiResult(x=geometry.x, model=model, phi=coarse,
                                per_m_terms=tuple(per_m), ell_max_used=ell_max,
                                m_max_used=max(m for m, _, _ in per_m),
                                convergence_estimate=None)
            raise UnconvergedError(
                f"ell_max budget {config.ell_max_budget} exhausted at x={geometry.x!r}", partial)
        fine, per_m = _phi_at(geometry, model, fine_ell, config)
        change = abs(fine - coarse) / abs(fine) if fine != 0.0 else abs(fine - coarse)
        if change < config.refine_tol:
            _check_decay(per_m)
            return PhiResult(x=geometry.x, model=model, phi=fine, per_m_terms=tuple(per_m),
                             ell_max_used=fine_ell, m_max_used=max(m for m, _, _ in per_m),
                             convergence_estimate=change)
        log.info("x=%g %s: ell_max %d -> %d changed Phi by %.3e", geometry.x, model.value,
                 ell_max, fine_ell, change)
        ell_max, coarse = fine_ell, fine


def rho_from_phi(result: PhiResult) -> RhoBeta:
    c = pfa_constant(result.model)
    rho = result.phi * result.x / c
    error = None
    if result.convergence_estimate is not None:
        error = result.convergence_estimate * rho
    return RhoBeta(x=result.x, model=result.model, rho=rho, beta=(rho - 1.0) / result.x,
                   beta_log_slope=None, error_estimate=error)


def rho(geometry: Geometry, model: MirrorModel | str,
        config: SolverConfig | None = None) -> RhoBeta:
    return rho_from_phi(phi(geometry, model, config))


def log_slope(func: Callable[[float], float], ln_x: float, h: float) -> tuple[float, float]:
    """d func / d ln x by central differences plus one Richardson step.

    ``func`` takes ln x. Returns (estimate, error estimate).
    """
    def central(step: float) -> float:
        return (func(ln_x + step) - func(ln_x - step)) / (2.0 * step)

    coarse = central(h)
    fine = central(0.5 * h)
    extrapolated = (4.0 * fine - coarse) / 3.0
    return extrapolated, abs(extrapolated - fine)


def beta_log_slope(x: float, model: MirrorModel | str, config: SolverConfig | None = None,
                   beta_fn: Callable[[float], float] | None = None) -> float:
    """d beta / d ln x at ``x``.

    ``beta_fn`` (a function of x) replaces the solver, e.g. for synthetic
    checks.
    """
    config = config or SolverConfig()
    model = MirrorModel.parse(model)
    if beta_fn is None:
        def beta_fn(xx: float) -> float:
            return rho(geometry_from_x(xx), model, config).beta
    value, _ = log_slope(lambda t: beta_fn(math.exp(t)), math.log(x), config.log_slope_step)
    return value


def force(geometry: Geometry, model: MirrorModel | str, kT: float,
          config: SolverConfig | None = None) -> ThermalOutput:
    """Free energy, entropy, internal energy and force at temperature scale kT.

    force = -(C kT / L) (1/x - d beta / d ln x), negative for attraction.
    """
    if not kT > 0:
        raise ValueError(f"kT must be positive, got {kT!r}")
    model = MirrorModel.parse(model)
    config = config or SolverConfig()
    result = phi(geometry, model, config)
    slope = beta_log_slope(geometry.x, model, config)
    c = pfa_constant(model)
    f = -(c * kT / geometry.L) * (1.0 / geometry.x - slope)
    return ThermalOutput(kT=kT, phi=result.phi, free_energy=-kT * result.phi,
                         entropy_over_kB=result.phi, internal_energy=0.0, force=f)


def ratio_perfect_drude(x: float, config: SolverConfig | None = None) -> float:
    """Phi_perfect / Phi_drude at identical numerical settings."""
    config = config or SolverConfig()
    geometry = geometry_from_x(x)
    return phi(geometry, MirrorModel.PERFECT, config).phi / phi(geometry, MirrorModel.DRUDE, config).phi


def clear_cache() -> None:
    """Drop memoised channel sums."""
    _channel_terms.cache_clear()
