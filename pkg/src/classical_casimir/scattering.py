"""Zero-frequency round-trip blocks for the plane-sphere geometry.

At vanishing frequency the electromagnetic problem splits into an
electrostatic part (TM on the plane, electric Mie amplitudes) and a
magnetostatic part (TE on the plane, magnetic Mie amplitudes). Both reduce
to image problems for solid harmonics. With the sphere center at the origin
and the plane at distance ``bigL``, the outgoing harmonic
``r^(-l'-1) P_l'^m(cos t) e^(i m p)`` reflected by the plane and re-expanded
around the center has the regular component

    sign * (l + l')! / ((l' - m)! (l + m)! (2 bigL)^(l + l' + 1))

on ``r^l P_l^m``, which comes from the integral of ``k^(l+l') exp(-2 k bigL)``
over the transverse wavenumber. Multiplying by the sphere's static response
and symmetrising with a diagonal similarity gives, for ``R = 1``,

    M_ll' = (-1)^(l+l') (l+l')! (z/2)^(l+l'+1) / sqrt((l-m)!(l+m)!(l'-m)!(l'+m)!)

times ``sqrt(l l' / ((l+1)(l'+1)))`` in the magnetic channel, with
``z = R / (L + R)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import hankel

from .core import Channel, DomainError, Geometry, MirrorModel
from .specfun import LogValue, log_double_factorial, log_factorial_table

# Entries below exp(-345) ~ 1e-150 are set to zero after balancing: they
# cannot affect det(I - M) and subnormal arithmetic slows the LU severalfold.
FLUSH_LOG = -345.0

SYMMETRIC = "symmetric"
RAW = "raw"

# Fresnel amplitudes of the plane at zero frequency.
_FRESNEL_SIGN = {Channel.ELECTRIC: 1, Channel.MAGNETIC: -1}


def _check_ell(ell: int) -> int:
    if int(ell) != ell or ell < 1:
        raise DomainError(f"multipole index must be an integer >= 1, got {ell!r}")
    return int(ell)


def electric_coefficient(ell: int, model: MirrorModel | str = MirrorModel.PERFECT) -> LogValue:
    """Constant c with a_l ~ c * xi^(2l+1) for small reduced frequency xi.

    Identical for Drude and perfect mirrors.
    """
    MirrorModel.parse(model)
    ell = _check_ell(ell)
    log_mag = (
        math.log((ell + 1) / ell)
        - log_double_factorial(2 * ell + 1)
        - log_double_factorial(2 * ell - 1)
    )
    return LogValue(-1 if ell % 2 else 1, log_mag)


def magnetic_coefficient(ell: int, model: MirrorModel | str = MirrorModel.PERFECT) -> LogValue:
    """Constant c with b_l ~ c * xi^(2l+1); zero for Drude spheres.

    The Drude magnetic amplitude starts one power of xi higher and does not
    survive the static limit.
    """
    model = MirrorModel.parse(model)
    ell = _check_ell(ell)
    if model is MirrorModel.DRUDE:
        return LogValue.zero()
    a = electric_coefficient(ell, model)
    return LogValue(-a.sign, a.log_magnitude + math.log(ell / (ell + 1)))


def mie_coefficient(ell: int, model: MirrorModel | str, channel: Channel) -> LogValue:
    if channel is Channel.ELECTRIC:
        return electric_coefficient(ell, model)
    return magnetic_coefficient(ell, model)


def translation_kernel(geometry: Geometry, ell: int, ell_prime: int, m: int,
                       channel: Channel) -> LogValue:
    """Static plane-reflection element between multipoles ``ell`` and ``ell_prime``.

    Normalised so that ``sign(c_l) * sqrt(|c_l c_l'|) * kernel`` is the
    symmetric round-trip entry, where ``c`` are the Mie coefficients of the
    channel. The magnitude is symmetric in the two indices; the sign carries
    the Fresnel amplitude and the mirror parity ``(-1)^l'``.
    """
    ell = _check_ell(ell)
    ell_prime = _check_ell(ell_prime)
    m = abs(int(m))
    if m > min(ell, ell_prime):
        raise DomainError(f"m={m} exceeds multipole indices ({ell}, {ell_prime})")
    lf = log_factorial_table(ell + ell_prime + m)
    log_mag = (
        lf[ell + ell_prime]
        + (ell + ell_prime + 1) * math.log(geometry.z / 2.0)
        - 0.5 * (lf[ell - m] + lf[ell + m] + lf[ell_prime - m] + lf[ell_prime + m])
        - 0.5 * (electric_coefficient(ell).log_magnitude
                 + electric_coefficient(ell_prime).log_magnitude)
    )
    sign = _FRESNEL_SIGN[channel] * (-1 if ell_prime % 2 else 1)
    return LogValue(sign, float(log_mag))


@dataclass(frozen=True)
class ChannelMatrix:
    """One (m, channel) block of the static round-trip operator.

    ``signs`` and ``logs`` hold the entries in sign/log-magnitude form; rows
    are indexed by the multipole scattered by the sphere.
    """

    m: int
    channel: Channel
    model: MirrorModel
    ell_min: int
    ell_max: int
    z: float
    signs: np.ndarray
    logs: np.ndarray
    convention: str = SYMMETRIC

    @property
    def dimension(self) -> int:
        return self.ell_max - self.ell_min + 1

    @property
    def ells(self) -> np.ndarray:
        return np.arange(self.ell_min, self.ell_max + 1)

    def entry(self, ell: int, ell_prime: int) -> LogValue:
        i = ell - self.ell_min
        j = ell_prime - self.ell_min
        return LogValue(int(self.signs[i, j]), float(self.logs[i, j]))

    def to_dense(self) -> np.ndarray:
        """Entries as plain floats (may under- or overflow for large blocks)."""
        with np.errstate(over="ignore", under="ignore"):
            return self.signs * np.exp(self.logs)


def build_channel_matrix(geometry: Geometry, model: MirrorModel | str, channel: Channel,
                         m: int, ell_max: int, convention: str = SYMMETRIC) -> ChannelMatrix:
    """Assemble the (m, channel) block for multipoles ``max(1, m) .. ell_max``.

    ``convention="raw"`` returns the unsymmetrised block in the basis of
    unnormalised solid harmonics (sphere radius as length unit); it is
    related to the symmetric one by a diagonal similarity.
    """
    model = MirrorModel.parse(model)
    if not model.admits(channel):
        raise DomainError(f"{channel.value} channel not admitted by {model.value} mirrors")
    if int(m) != m or m < 0:
        raise DomainError(f"m must be a nonnegative integer, got {m!r}")
    m = int(m)
    ell_min = max(1, m)
    if int(ell_max) != ell_max or ell_max < ell_min:
        raise DomainError(f"ell_max={ell_max!r} below the smallest multipole {ell_min} for m={m}")
    ell_max = int(ell_max)
    if convention not in (SYMMETRIC, RAW):
        raise DomainError(f"unknown convention {convention!r}")

    ells = np.arange(ell_min, ell_max + 1)
    lf = log_factorial_table(2 * ell_max + 1)
    # (l+l')! (z/2)^(l+l'+1) depends on l+l' only.
    s = np.arange(2 * ell_min, 2 * ell_max + 1)
    by_sum = lf[s] + (s + 1) * math.log(geometry.z / 2.0)
    n = len(ells)
    base = hankel(by_sum[:n], by_sum[n - 1:])
    lo = lf[ells - m]
    hi = lf[ells + m]

    if convention == SYMMETRIC:
        half = 0.5 * (lo + hi)
        if channel is Channel.MAGNETIC:
            half = half - 0.5 * (np.log(ells) - np.log(ells + 1.0))
        base -= half[:, None] + half[None, :]
        logs = base
    else:
        row = hi.copy()
        if channel is Channel.MAGNETIC:
            row = row - (np.log(ells) - np.log(ells + 1.0))
        base -= row[:, None]
        base -= lo[None, :]
        logs = base

    parity = np.where(ells % 2 == 0, 1, -1).astype(np.int8)
    signs = np.multiply.outer(parity, parity)
    return ChannelMatrix(m=m, channel=channel, model=model, ell_min=ell_min, ell_max=ell_max,
                         z=geometry.z, signs=signs, logs=logs, convention=convention)


@dataclass(frozen=True)
class BalancedMatrix:
    """Plain-float block after a diagonal similarity ``D M D^-1``.

    ``log_scaling`` holds ``ln D``; ``diagonal_logs`` the (unchanged)
    log-magnitudes of the diagonal.
    """

    m: int
    channel: Channel
    model: MirrorModel
    ell_min: int
    ell_max: int
    entries: np.ndarray
    diagonal_logs: np.ndarray
    log_scaling: np.ndarray

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]


def _log_balance(signs: np.ndarray, logs: np.ndarray) -> np.ndarray:
    nonzero = signs != 0
    if nonzero.all():
        return 0.5 * (logs.mean(axis=0) - logs.mean(axis=1))
    # Pairwise means over entries present in both (i, j) and (j, i).
    both = nonzero & nonzero.T
    g = np.where(both, logs, 0.0)
    count = np.maximum(both.sum(axis=1), 1)
    return 0.5 * (g.sum(axis=0) - g.sum(axis=1)) / count


def _flushed_exp(signs: np.ndarray, logs: np.ndarray) -> np.ndarray:
    with np.errstate(under="ignore", over="ignore"):
        entries = np.exp(logs)
    entries[logs < FLUSH_LOG] = 0.0
    entries *= signs
    return entries


def balance(matrix: ChannelMatrix) -> BalancedMatrix:
    """Diagonal similarity that equalises ``|M_ij|`` and ``|M_ji|``.

    For blocks of the form ``u_i v_j S_ij`` with symmetric ``S`` (both
    conventions used here) the result is exactly symmetric in magnitude;
    symmetric input passes through unscaled. Being a similarity it leaves
    ``det(I - M)`` unchanged.
    """
    signs = matrix.signs
    logs = matrix.logs
    if matrix.convention == SYMMETRIC:
        delta = np.zeros(matrix.dimension)
    else:
        delta = _log_balance(signs, logs)
    scaled = logs + (delta[:, None] - delta[None, :]) if delta.any() else logs
    entries = _flushed_exp(signs, scaled)
    if not np.all(np.isfinite(entries)):
        raise DomainError("balanced block has non-finite entries")
    return BalancedMatrix(m=matrix.m, channel=matrix.channel, model=matrix.model,
                          ell_min=matrix.ell_min, ell_max=matrix.ell_max, entries=entries,
                          diagonal_logs=np.diagonal(logs).copy(), log_scaling=delta)


def balance_dense(signs: np.ndarray, logs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Balance an arbitrary sign/log matrix; returns (entries, log_scaling)."""
    delta = _log_balance(signs, logs)
    return _flushed_exp(signs, logs + delta[:, None] - delta[None, :]), delta
