"""Constraint expression language: regions, parser, soft indicator, sampling."""
from .expr import PolyExpr
from .parser import parse_constraints, pretty_constraints, pretty_region
from .regions import (
    MixtureComponent,
    NegativeRegion,
    PiMode,
    PositiveRegion,
    Region,
    SamplerPi,
    SoftIndicatorParams,
    box_contains,
    classifier_c,
    classifier_c_batch,
    grad_classifier_c,
    grad_classifier_c_batch,
    hard_membership,
    sample_pi,
    soft_indicator,
    soft_indicator_deriv,
)

__all__ = [
    "PolyExpr",
    "parse_constraints",
    "pretty_constraints",
    "pretty_region",
    "MixtureComponent",
    "NegativeRegion",
    "PiMode",
    "PositiveRegion",
    "Region",
    "SamplerPi",
    "SoftIndicatorParams",
    "box_contains",
    "classifier_c",
    "classifier_c_batch",
    "grad_classifier_c",
    "grad_classifier_c_batch",
    "hard_membership",
    "sample_pi",
    "soft_indicator",
    "soft_indicator_deriv",
]
