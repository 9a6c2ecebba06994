"""Curvature operators of space forms and projected Sasaki geodesics."""

from .algebra import (
    BivectorInvariants,
    DimensionError,
    Kind,
    SpaceFormSpec,
    StructureSet,
    bivector_invariants,
    curvature_operator,
    make_complex_structure,
    make_quaternionic_structures,
    make_structures,
    relative_residual,
    sphere_type_operator,
    verify_operator_tables,
)
from .frenet import (
    CurvatureProfile,
    DegenerateInput,
    constancy_check,
    curvature_profile,
    linear_relation_check,
    span_rank,
    vanishing_tail_check,
)
from .geodesics import (
    BundleKind,
    GeodesicState,
    InitialData,
    closed_form_state,
    conserved_quantities,
    derivative_stack,
    generator_operator,
    integrate_rk4,
    random_initial,
)
from .recurrence import (
    PowerReduction,
    operator_power,
    real_power_closed_form,
    reduce_power,
    reduction_basis,
    verify_T_recurrence,
)
from .report import TrialReport

__version__ = "0.1.0"

__all__ = [
    "BivectorInvariants",
    "DimensionError",
    "Kind",
    "SpaceFormSpec",
    "StructureSet",
    "bivector_invariants",
    "curvature_operator",
    "make_complex_structure",
    "make_quaternionic_structures",
    "make_structures",
    "relative_residual",
    "sphere_type_operator",
    "verify_operator_tables",
    "CurvatureProfile",
    "DegenerateInput",
    "constancy_check",
    "curvature_profile",
    "linear_relation_check",
    "span_rank",
    "vanishing_tail_check",
    "BundleKind",
    "GeodesicState",
    "InitialData",
    "closed_form_state",
    "conserved_quantities",
    "derivative_stack",
    "generator_operator",
    "integrate_rk4",
    "random_initial",
    "PowerReduction",
    "operator_power",
    "real_power_closed_form",
    "reduce_power",
    "reduction_basis",
    "verify_T_recurrence",
    "TrialReport",
]
