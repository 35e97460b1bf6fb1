"""Domain types, configuration and PFA constants shared by the solver."""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field

ZETA3 = 1.2020569031595942853997381615114499907649862923405


class CasimirError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(CasimirError, ValueError):
    """An argument lies outside the domain of an operation."""


class Channel(enum.Enum):
    ELECTRIC = "electric"
    MAGNETIC = "magnetic"


class MirrorModel(enum.Enum):
    DRUDE = "drude"
    PERFECT = "perfect"

    @property
    def channels(self) -> tuple[Channel, ...]:
        # Drude mirrors are transparent to static magnetic fields
        # (r_TE -> 0 on the plane, magnetic Mie amplitude dropped).
        if self is MirrorModel.DRUDE:
            return (Channel.ELECTRIC,)
        return (Channel.ELECTRIC, Channel.MAGNETIC)

    def admits(self, channel: Channel) -> bool:
        return channel in self.channels

    @classmethod
    def parse(cls, value: str | MirrorModel) -> MirrorModel:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DomainError(f"unknown mirror model {value!r}") from None


@dataclass(frozen=True)
class Geometry:
    """Plane-sphere configuration.

    ``L`` is the closest surface-to-surface distance and ``R`` the sphere
    radius, both in arbitrary but identical length units. Only the ratios
    enter the physics.
    """

    L: float
    R: float
    x: float
    bigL: float
    z: float


def make_geometry(L: float, R: float) -> Geometry:
    L = float(L)
    R = float(R)
    if not (math.isfinite(L) and math.isfinite(R)) or L <= 0.0 or R <= 0.0:
        raise DomainError(f"L and R must be positive and finite, got L={L!r}, R={R!r}")
    x = L / R
    return Geometry(L=L, R=R, x=x, bigL=L + R, z=1.0 / (1.0 + x))


def geometry_from_x(x: float) -> Geometry:
    """Geometry with unit sphere radius."""
    return make_geometry(x, 1.0)


def pfa_constant(model: MirrorModel | str) -> float:
    """Plane-plane prefactor C with Phi_PFA = C / x."""
    model = MirrorModel.parse(model)
    if model is MirrorModel.DRUDE:
        return ZETA3 / 8.0
    return ZETA3 / 4.0


def pfa_phi(geometry: Geometry, model: MirrorModel | str) -> float:
    return pfa_constant(model) / geometry.x


def _default_workers() -> int:
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SolverConfig:
    """Numerical settings for the determinant engine.

    The multipole cutoff is ``ceil(eta / x)`` unless ``ell_max_override`` is
    given. With an override the cutoff is used as is and no doubling check is
    performed.
    """

    ell_max_override: int | None = None
    eta: float = 10.0
    m_rel_tol: float = 1e-10
    refine_tol: float = 1e-8
    log_slope_step: float = 0.05
    worker_count: int = field(default_factory=_default_workers)
    cache_path: str | None = None
    ell_max_budget: int = 20000

    def __post_init__(self) -> None:
        if self.ell_max_override is not None and int(self.ell_max_override) < 1:
            raise DomainError("ell_max_override must be a positive integer")
        if not self.eta > 0:
            raise DomainError("eta must be positive")
        for name in ("m_rel_tol", "refine_tol"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise DomainError(f"{name} must lie in (0, 1), got {value!r}")
        if not self.log_slope_step > 0:
            raise DomainError("log_slope_step must be positive")
        if int(self.worker_count) < 1:
            raise DomainError("worker_count must be at least 1")
        if int(self.ell_max_budget) < 1:
            raise DomainError("ell_max_budget must be at least 1")

    def initial_ell_max(self, x: float) -> int:
        if self.ell_max_override is not None:
            return int(self.ell_max_override)
        return max(1, math.ceil(self.eta / x))


@dataclass(frozen=True)
class ThermalOutput:
    """Thermodynamic quantities at temperature scale ``kT`` (energy units).

    ``force`` is in energy per length unit of the geometry; negative values
    are attractive.
    """

    kT: float
    phi: float
    free_energy: float
    entropy_over_kB: float
    internal_energy: float
    force: float
