"""Deterministic limit objects: Bessel series, fixed point, kernel, Fredholm solve."""

from .bessel import DomainError, bessel_J1, bessel_J1_real, bessel_J1_tilde
from .fixed_point import (
    PROVEN_RE_Z,
    FixedPointError,
    GridFunction,
    matched_node_change,
    solve_fixed_point,
    stieltjes_limit,
)
from .identities import IdentityResidual, bessel_integral, laplace_identity_residual, laplace_integral
from .kernel import (
    ContractionError,
    ContractionSweep,
    KernelBoundError,
    KernelMatrix,
    build_kernel,
    fredholm_solve,
    kernel_values,
    locate_contraction_threshold,
    nystrom_extend,
    operator_norm_estimate,
)
from .quadrature import GridConfig, composite_gauss_legendre, tail_cutoff
