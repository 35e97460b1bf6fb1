"""Classical (high-temperature) Casimir interaction between a plane and a sphere.

The free energy is ``F = -kT * Phi(x)`` with ``x = L/R``; ``Phi`` is obtained
from zero-frequency round-trip determinants for Drude or perfect mirrors.
"""

from .core import (
    ZETA3,
    CasimirError,
    Channel,
    DomainError,
    Geometry,
    MirrorModel,
    SolverConfig,
    ThermalOutput,
    geometry_from_x,
    make_geometry,
    pfa_constant,
    pfa_phi,
)
from .engine import (
    PhiResult,
    RhoBeta,
    UnconvergedError,
    beta_log_slope,
    force,
    phi,
    ratio_perfect_drude,
    rho,
)
from .fits import Basis, BetaSample, FitSpec, compare_fits, evaluate_fit, fit_beta

__all__ = [
    "ZETA3", "CasimirError", "Channel", "DomainError", "Geometry", "MirrorModel",
    "SolverConfig", "ThermalOutput", "geometry_from_x", "make_geometry", "pfa_constant",
    "pfa_phi", "PhiResult", "RhoBeta", "UnconvergedError", "beta_log_slope", "force", "phi",
    "ratio_perfect_drude", "rho", "Basis", "BetaSample", "FitSpec", "compare_fits",
    "evaluate_fit", "fit_beta",
]
