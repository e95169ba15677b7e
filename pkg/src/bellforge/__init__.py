"""Multipartite Bell inequalities: generation, homogenization, classical and quantum bounds."""

__version__ = "0.1.0"

from .expr import (CorrelatorExpression, DeterministicStrategy, ExpressionError, PartyLayout,
                   ProbabilityExpression, canonicalize_symmetric, correlator_to_prob,
                   evaluate_deterministic, prob_to_correlator)
from .generators import hardy, upb_noqv
from .polytope import enumerate_bounds, saturating_vertices, tightness
from .quantum import (MeasurementConfig, NoiseModel, PureState, bell_operator, expectation,
                      ghz_sweep, seesaw_settings, seesaw_state_and_settings, threshold_visibility)
from .transforms import homogenize, restrict
from .exclusivity import build_graph, independence_number, lovasz_theta

__all__ = [
    "CorrelatorExpression", "DeterministicStrategy", "ExpressionError", "PartyLayout",
    "ProbabilityExpression", "canonicalize_symmetric", "correlator_to_prob",
    "evaluate_deterministic", "prob_to_correlator", "hardy", "upb_noqv", "enumerate_bounds",
    "saturating_vertices", "tightness", "MeasurementConfig", "NoiseModel", "PureState",
    "bell_operator", "expectation", "ghz_sweep", "seesaw_settings", "seesaw_state_and_settings",
    "threshold_visibility", "homogenize", "restrict", "build_graph", "independence_number",
    "lovasz_theta",
]
