"""Projection and rescaling feasibility solver for symmetric cones (orthant, second-order and PSD products)."""

from .jordan import (
    ConeStructure,
    Direction,
    Element,
    FrameScaling,
    Orthant,
    Psd,
    SecondOrder,
    inner,
    jordan_product,
    norms,
    project_cone,
    quadratic_rep,
    spectral_decompose,
    spectraplex_project,
)
from .linear_ops import DenseOperator, KernelProjector, build_kernel_projector, compose_scaling, project_kernel
from .main_algorithm import Criterion, MAConfig, SolveResult, solve
from .basic_procedure import BPConfig, Scheme

__version__ = "0.1.0"
