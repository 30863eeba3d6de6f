"""Uncertainty quantification of phononic bandgaps.

Pixelated unit cells -> Bloch-periodic plane-strain FEM dispersion ->
bandgap extraction -> polynomial-chaos surrogates fitted by Monte Carlo,
tensor quadrature, or Smolyak sparse-grid spectral projection.
"""

__version__ = "0.1.0"

from .bandgap import BandGap, GapPolicy, extract_gaps, primary_gap
from .distributions import Distribution1D, JointDistribution
from .fem import (
    AssembledOperators,
    DispersionResult,
    UnitCellSpec,
    WaveVector,
    assemble_operators,
    dispersion,
    ibz_path,
    solve_bands,
)
from .geometry import DefectSpec, UnitCellBitmap, apply_defects, find_edge_pixels, scale_bitmap
from .materials import ElasticMaterial, MaterialPair, default_material_pair, elastic_from_EN

__all__ = [
    "AssembledOperators",
    "BandGap",
    "DefectSpec",
    "Distribution1D",
    "DispersionResult",
    "ElasticMaterial",
    "GapPolicy",
    "JointDistribution",
    "MaterialPair",
    "UnitCellBitmap",
    "UnitCellSpec",
    "WaveVector",
    "apply_defects",
    "assemble_operators",
    "default_material_pair",
    "dispersion",
    "elastic_from_EN",
    "extract_gaps",
    "find_edge_pixels",
    "ibz_path",
    "primary_gap",
    "scale_bitmap",
    "solve_bands",
]
