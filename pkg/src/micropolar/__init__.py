"""Spectral toolkit for the 3D micropolar fluid system."""

from ._accel import backend
from .linear import (
    EigQuantities,
    MaterialParams,
    SymbolComponents,
    apply_linear,
    e_components,
    eig_quantities,
    heat_profiles,
    prop_e_residuals,
    propagator_matrix,
)
from .spectral import GridSpec, SpectralField, StateSpectral

__version__ = "0.1.0"

__all__ = [
    "EigQuantities",
    "GridSpec",
    "MaterialParams",
    "SpectralField",
    "StateSpectral",
    "SymbolComponents",
    "apply_linear",
    "backend",
    "e_components",
    "eig_quantities",
    "heat_profiles",
    "prop_e_residuals",
    "propagator_matrix",
]
