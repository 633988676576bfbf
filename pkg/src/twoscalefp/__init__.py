"""Solver for subdiffusion with combined local and integral fractional
diffusion on an interval: L1 discretisation of the memory term, P1 finite
elements with a dense nonlocal stiffness matrix, spectral fractional norms,
and a self-refinement convergence-study harness.
"""
from .assembly import (
    AssembledOperators,
    LoadRule,
    assemble_fractional,
    assemble_mass,
    assemble_operators,
    assemble_stiffness,
    exterior_tail_weight,
    fractional_constant,
    l2_project,
    load_vector,
)
from .errors import NumericsError, QuadratureError
from .mesh import FemVector, Mesh, build_mesh, prolongate
from .mittag_leffler import mittag_leffler
from .norms import SpectralDecomposition, norm_hsigma, norm_l2, spectral_decompose
from .quadrature import QuadratureConfig
from .study import (
    ConvergenceReport,
    ErrorNorm,
    StudySpec,
    clear_caches,
    preset,
    preset_a,
    preset_b,
    run_study,
    run_table,
    self_refinement_error,
    table_studies,
)
from .timestepping import (
    L1Weights,
    ProblemSpec,
    SeparableSource,
    Trajectory,
    l1_weights,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "AssembledOperators",
    "ConvergenceReport",
    "ErrorNorm",
    "FemVector",
    "L1Weights",
    "LoadRule",
    "Mesh",
    "NumericsError",
    "ProblemSpec",
    "QuadratureConfig",
    "QuadratureError",
    "SeparableSource",
    "SpectralDecomposition",
    "StudySpec",
    "Trajectory",
    "assemble_fractional",
    "assemble_mass",
    "assemble_operators",
    "assemble_stiffness",
    "build_mesh",
    "clear_caches",
    "exterior_tail_weight",
    "fractional_constant",
    "l1_weights",
    "l2_project",
    "load_vector",
    "mittag_leffler",
    "norm_hsigma",
    "norm_l2",
    "preset",
    "preset_a",
    "preset_b",
    "prolongate",
    "run_study",
    "run_table",
    "self_refinement_error",
    "solve",
    "spectral_decompose",
    "table_studies",
]
