"""Invariant Hermitian geometry and the reduced Anomaly flow on 6-dimensional almost-abelian Lie algebras."""

from .algebra import (
    AlmostAbelianStructure,
    BalancedParams,
    HermitianMetric,
    StructureError,
    balanced_check,
    canonical_trivial_check,
    kahler_check,
    structure_constants,
    structure_from_json,
)
from .connections import (
    ConnectionForms,
    CurvatureForms,
    InstantonStatus,
    curvature_forms,
    gauduchon_forms,
    instanton_check,
    proportionality_K,
    su3_check,
    trace_curvature_wedge,
)
from .exterior import KForm, StructureConstants, exterior_derivative, wedge
from .flow import FlowConfig, FlowResult, TrajectoryPoint, integrate_bracket_flow, integrate_metric_flow
from .hull_strominger import Classification, HSReport, classify

__all__ = [
    "AlmostAbelianStructure",
    "BalancedParams",
    "Classification",
    "ConnectionForms",
    "CurvatureForms",
    "FlowConfig",
    "FlowResult",
    "HSReport",
    "HermitianMetric",
    "InstantonStatus",
    "KForm",
    "StructureConstants",
    "StructureError",
    "TrajectoryPoint",
    "balanced_check",
    "canonical_trivial_check",
    "classify",
    "curvature_forms",
    "exterior_derivative",
    "gauduchon_forms",
    "instanton_check",
    "integrate_bracket_flow",
    "integrate_metric_flow",
    "kahler_check",
    "proportionality_K",
    "structure_constants",
    "structure_from_json",
    "su3_check",
    "trace_curvature_wedge",
    "wedge",
]
