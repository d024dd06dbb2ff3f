"""Coupled LDPC ensembles over the binary erasure channel.

Modules:
    ensembles          position-level connectivity, degree profiles, design rates
    density_evolution  vector DE, BP thresholds, iteration counts, splitting checks
    protograph         base matrices, precoding checks, protograph DE, lifting
    finite_length      graph sampling, peeling and BP decoding, FER, graph evolution
    cli                command-line entry point
"""
from .errors import (
    CoupledLDPCError,
    DimensionMismatchError,
    InvalidParametersError,
    InvalidPrecodeError,
    LiftingInfeasibleError,
    SamplingError,
)
from .ensembles import EnsembleSpec, connectivity, degree_profile, design_rate
from .density_evolution import bp_threshold, evolve, regular_bp_threshold, required_iterations

__all__ = [
    "CoupledLDPCError",
    "DimensionMismatchError",
    "InvalidParametersError",
    "InvalidPrecodeError",
    "LiftingInfeasibleError",
    "SamplingError",
    "EnsembleSpec",
    "connectivity",
    "degree_profile",
    "design_rate",
    "bp_threshold",
    "evolve",
    "regular_bp_threshold",
    "required_iterations",
]
