"""One-dimensional diffusion calculus: scale/speed, conjugation, Feller
boundary classification, the transition-kernel catalog, and the CDF-duality
and density-relation residual checks."""
from .core import (
    Boundary,
    CatalogError,
    CoefficientDomainError,
    DegenerateInputError,
    DiffusionSpec,
    DUAL_BOUNDARY,
    DUAL_FELLER,
    FellerClass,
    InconclusiveBoundaryError,
    ScaleSpeed,
    TransitionKernel,
    TruncationError,
    boundary_integrals,
    classify_boundary,
    conjugate,
    conjugate_density_residual,
    duality_residual,
    feller_class_of,
    scale_speed,
    swapped_scale_speed,
    symmetry_residual,
    validate_spec,
)
from .catalog import (
    CATALOG_IDS,
    SpectralBasis,
    has_spectral_basis,
    kernel,
    make_spec,
    spectral_basis,
)

__all__ = [
    "Boundary",
    "CatalogError",
    "CoefficientDomainError",
    "DegenerateInputError",
    "DiffusionSpec",
    "DUAL_BOUNDARY",
    "DUAL_FELLER",
    "FellerClass",
    "InconclusiveBoundaryError",
    "ScaleSpeed",
    "SpectralBasis",
    "TransitionKernel",
    "TruncationError",
    "CATALOG_IDS",
    "boundary_integrals",
    "classify_boundary",
    "conjugate",
    "conjugate_density_residual",
    "duality_residual",
    "feller_class_of",
    "has_spectral_basis",
    "kernel",
    "make_spec",
    "scale_speed",
    "spectral_basis",
    "swapped_scale_speed",
    "symmetry_residual",
    "validate_spec",
]
