"""Correlated projection superoperators for open quantum system dynamics."""

from .config import DEFAULT_TOLERANCES, Tolerances
from .models import Model, ModelSpec, build_model, default_correlated_projection
from .operators import DensityMatrix, HilbertSpace, Operator
from .projections import (CorrelatedProjection, ProductProjection, ProjectionError,
                          assemble_initial_state, conservation_check, relevant_states,
                          validate_correlated)
from .superop import InteractionLiouvillian, SuperOperator, TimeDependentSuperOperator

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOLERANCES", "CorrelatedProjection", "DensityMatrix", "HilbertSpace",
    "InteractionLiouvillian", "Model", "ModelSpec", "Operator", "ProductProjection",
    "ProjectionError", "SuperOperator", "TimeDependentSuperOperator", "Tolerances",
    "assemble_initial_state", "build_model", "conservation_check",
    "default_correlated_projection", "relevant_states", "validate_correlated",
]
