"""Spatial discretization: grid, operators, domain transport and expressions."""

from shape_control.discretization.base import (
    AdmissibilityError,
    CFLViolationError,
    ConfigurationError,
    ContractError,
    DivergenceError,
    DomainError,
    EquationKind,
    NonConvergenceError,
    RankDeficiencyError,
    ResolutionError,
    ShapeControlError,
    SingularityError,
)
from shape_control.discretization.domain_map import (
    JacobianSample,
    transport_matrix,
    transport_matrix_literal,
)
from shape_control.discretization.expressions import Expression
from shape_control.discretization.grid import (
    GridField,
    GridSpec,
    NodeClass,
    classify,
    interior_to_vector,
    sine_mode,
    vector_to_interior,
)
from shape_control.discretization.operators import (
    DeformationPath,
    apply_laplacian,
    apply_perturbed,
    assemble_derivative_matrix,
    assemble_matrix,
    laplacian_eigenvalue,
    laplacian_matrix,
    operator_derivative,
    operator_derivative_at,
    operator_norm_bound_check,
)

__all__ = [
    "AdmissibilityError",
    "CFLViolationError",
    "ConfigurationError",
    "ContractError",
    "DeformationPath",
    "DivergenceError",
    "DomainError",
    "EquationKind",
    "Expression",
    "GridField",
    "GridSpec",
    "JacobianSample",
    "NodeClass",
    "NonConvergenceError",
    "RankDeficiencyError",
    "ResolutionError",
    "ShapeControlError",
    "SingularityError",
    "apply_laplacian",
    "apply_perturbed",
    "assemble_derivative_matrix",
    "assemble_matrix",
    "classify",
    "interior_to_vector",
    "laplacian_eigenvalue",
    "laplacian_matrix",
    "operator_derivative",
    "operator_derivative_at",
    "operator_norm_bound_check",
    "sine_mode",
    "transport_matrix",
    "transport_matrix_literal",
    "vector_to_interior",
]
