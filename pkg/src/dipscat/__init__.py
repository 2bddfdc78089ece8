"""Cold-atom elastic scattering with a dc-field-induced dipole interaction.

Two pipelines over the same potential model: direct coupled-channel Numerov
integration to the asymptotic region, and a multichannel quantum defect
treatment that matches to exact -1/R^3 and -1/R^6 tail solutions at a short
radius. See README for the CLI and the acceptance suite.
"""

from .channels import Channel, ChannelBasis, build_basis, p2_matrix_element
from .potential import (
    CutoffSpec,
    PotentialMatrixEvaluator,
    ShortRangeModel,
    matching_function,
    tune_short_range,
)
from .propagator import (
    RadialGrid,
    ScatteringMatrices,
    SolutionMatrix,
    cross_section,
    propagate,
    scattering_length,
    solve_k_matrix,
)
from .system import EnergySpec, FieldSpec, SystemParams, field_to_au, temperature_to_energy

__all__ = [
    "Channel",
    "ChannelBasis",
    "CutoffSpec",
    "EnergySpec",
    "FieldSpec",
    "PotentialMatrixEvaluator",
    "RadialGrid",
    "ScatteringMatrices",
    "ShortRangeModel",
    "SolutionMatrix",
    "SystemParams",
    "build_basis",
    "cross_section",
    "field_to_au",
    "matching_function",
    "p2_matrix_element",
    "propagate",
    "scattering_length",
    "solve_k_matrix",
    "temperature_to_energy",
    "tune_short_range",
]

__version__ = "0.1.0"
