"""Lattice laboratory for the fractional p-Laplacian: polarization
inequalities, second eigenpairs, least energy nodal solutions, and the
geometry of nodal sets on Steiner-symmetric domains."""

from ._pairsum import BACKEND
from .energy import GridFunction, Nonlinearity, dpairing, energy, gagliardo_p
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateDomainError,
    FracplapError,
    ParameterError,
    WindowError,
)
from .kernel import KernelWeights, build_kernel, check_kernel_condition
from .lattice import (
    LatticeDomain,
    ReflectionParam,
    Window,
    boundary_lids,
    check_steiner,
    make_steiner_domain,
    polarize_mask,
)
from .polarization import (
    EqualityCase,
    equality_case,
    polarization_identities_check,
    polarization_pairing_deficit,
    polarize,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    "GridFunction",
    "Nonlinearity",
    "dpairing",
    "energy",
    "gagliardo_p",
    "KernelWeights",
    "build_kernel",
    "check_kernel_condition",
    "LatticeDomain",
    "ReflectionParam",
    "Window",
    "boundary_lids",
    "check_steiner",
    "make_steiner_domain",
    "polarize_mask",
    "EqualityCase",
    "equality_case",
    "polarization_identities_check",
    "polarization_pairing_deficit",
    "polarize",
    "FracplapError",
    "ParameterError",
    "WindowError",
    "ConfigError",
    "ConvergenceError",
    "DegenerateDomainError",
]
