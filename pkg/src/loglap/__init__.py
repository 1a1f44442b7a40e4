"""Logarithmic Laplacians on the integer lattice and for Schrodinger operators on R^d.

Submodules
----------
special_functions
    Scaled Bessel functions, exponential integral, incomplete gamma.
quadrature
    Adaptive Gauss-Kronrod integration and Richardson extrapolation.
lattice_heat
    Heat kernel and semigroup on Z.
discrete_log
    ``log(-Delta_d)`` by kernel sums and by Fourier multipliers.
discrete_extension
    The extension problem on ``Z x (0, inf)`` and its boundary limits.
schrodinger_log
    ``log(-Delta + V)`` for constant and harmonic potentials.
acceptance, reporting, cli
    Acceptance checks, study configuration and the command line.
"""

from .discrete_extension import (
    boundary_limits,
    extension_constant,
    extension_trace,
    extension_u,
    log_via_extension,
    pde_residual,
)
from .discrete_log import (
    build_kernel_table,
    fractional_difference_quotient,
    log_laplacian_pointwise,
    log_laplacian_spectral,
    small_s_limit_check,
)
from .errors import ConfigError, ConvergenceError, LoglapError, QuadratureError
from .lattice_heat import LatticeFunction, heat_apply, heat_kernel
from .quadrature import ConvergenceReport, Estimate, QuadratureSpec, richardson_limit
from .schrodinger_log import (
    PotentialModel,
    RadialProfile,
    alpha_beta,
    correctors,
    heat_kernel_V,
    log_LV_pointwise,
    spectral_oracle_constant,
    theorem11_limits,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "ConvergenceReport",
    "Estimate",
    "LatticeFunction",
    "LoglapError",
    "PotentialModel",
    "QuadratureError",
    "QuadratureSpec",
    "RadialProfile",
    "alpha_beta",
    "boundary_limits",
    "build_kernel_table",
    "correctors",
    "extension_constant",
    "extension_trace",
    "extension_u",
    "fractional_difference_quotient",
    "heat_apply",
    "heat_kernel",
    "heat_kernel_V",
    "log_LV_pointwise",
    "log_laplacian_pointwise",
    "log_laplacian_spectral",
    "log_via_extension",
    "pde_residual",
    "richardson_limit",
    "small_s_limit_check",
    "spectral_oracle_constant",
    "theorem11_limits",
]
