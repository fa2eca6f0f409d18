"""Finite elements and convolution quadrature for the two-state
time-fractional Fokker-Planck system."""

from .cq import CqWeights, binomial_series, cq_weights, history_sum
from .errors import DivergenceError, SolverError
from .fem import (
    FemFunction,
    ScalarField,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    evaluate,
    interpolate,
    l2_error,
    l2_project,
    ritz_project,
)
from .harness import ConvergenceTable, decay_study, read_csv, spatial_study, summarize, temporal_study
from .mesh import Mesh, build_interval_mesh, build_square_mesh, locate
from .oracle import ContourParams, default_contour, mittag_leffler, modal_solution, oracle_solution
from .problems import PROBLEM_NAMES, ProblemSpec, Source, get_problem
from .stepper import HistoryCache, SchemeMatrices, StatePair, advance, run, solve_block

__version__ = "0.1.0"

__all__ = [
    "ContourParams",
    "ConvergenceTable",
    "CqWeights",
    "DivergenceError",
    "FemFunction",
    "HistoryCache",
    "Mesh",
    "PROBLEM_NAMES",
    "ProblemSpec",
    "ScalarField",
    "SchemeMatrices",
    "SolverError",
    "Source",
    "StatePair",
    "advance",
    "assemble_load",
    "assemble_mass",
    "assemble_stiffness",
    "binomial_series",
    "build_interval_mesh",
    "build_square_mesh",
    "cq_weights",
    "decay_study",
    "default_contour",
    "evaluate",
    "get_problem",
    "history_sum",
    "interpolate",
    "l2_error",
    "l2_project",
    "locate",
    "mittag_leffler",
    "modal_solution",
    "oracle_solution",
    "read_csv",
    "ritz_project",
    "run",
    "solve_block",
    "spatial_study",
    "summarize",
    "temporal_study",
]
