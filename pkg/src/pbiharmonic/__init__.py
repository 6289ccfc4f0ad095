"""Discontinuous Galerkin discretisation of the p-biharmonic equation

    Lap(|Lap u|^{p-2} Lap u) = f  in (0, 1)^2,  u = grad u . n = 0 on the boundary,

built around a finite element (dG) Hessian and solved by minimising the
discrete energy with a damped Newton method.
"""
from .analysis import ErrorRecord, dg_norm, eoc, error_record, lp_norm
from .hessian import HessianOperator, assemble_D, stability_ratio
from .kernels import BACKEND
from .manufactured import ExactSolution
from .mesh import Mesh, build_structured, shape_regularity, skeleton
from .solver import (PBiharmonicProblem, SolveConfig, SolveReport, SolverError,
                     apriori_check, solve)
from .space import DgFunction, DgSpace, build_space, l2_project

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DgFunction", "DgSpace", "ErrorRecord", "ExactSolution",
    "HessianOperator", "Mesh", "PBiharmonicProblem", "SolveConfig",
    "SolveReport", "SolverError", "apriori_check", "assemble_D", "build_space",
    "build_structured", "dg_norm", "eoc", "error_record", "l2_project",
    "lp_norm", "shape_regularity", "skeleton", "solve", "stability_ratio",
]
