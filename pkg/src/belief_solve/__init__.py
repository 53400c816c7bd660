"""Gaussian belief propagation linear solvers.

Scalar GaBP for nonsymmetric systems, two-layer generalized GaBP on region
graphs, geometric multigrid with GaBP and classical smoothers, the
benchmark PDE problems and a command line driver.
"""

from .classic import SmootherConfig, bicgstab, relax, relax_solve
from .gabp import (
    FrozenLambda,
    MessageGraph,
    MessageState,
    PivotBreakdown,
    build_message_graph,
    error_correction_apply,
    error_correction_solve,
    gabp_solve,
    gabp_sweep,
    precompute_lambda,
)
from .multigrid import CycleSpec, build_hierarchy, mg_solve, multigrid, prolong, restrict, v_cycle
from .ordering import Schedule
from .problems import DEFAULT_PARAMS, PROBLEM_NAMES, assemble, exact_solution, problem_def
from .region import (
    BlockPartition,
    RegionGraph,
    RegionGraphError,
    build_two_layer_region_graph,
    check_block_convergence,
    generalized_solve,
    generalized_sweep,
    line_regions,
    validate_counting,
)
from .report import SolveReport
from .sparse import (
    SparseMatrix,
    extract_block,
    load_matrix_market,
    residual_inf_norm,
    save_matrix_market,
    spectral_radius,
)

__version__ = "0.1.0"

__all__ = [
    "BlockPartition", "CycleSpec", "DEFAULT_PARAMS", "FrozenLambda", "MessageGraph", "MessageState",
    "PROBLEM_NAMES", "PivotBreakdown", "RegionGraph", "RegionGraphError", "Schedule",
    "SmootherConfig", "SolveReport", "SparseMatrix", "assemble", "bicgstab", "build_hierarchy",
    "build_message_graph", "build_two_layer_region_graph", "check_block_convergence",
    "error_correction_apply", "error_correction_solve", "exact_solution", "extract_block",
    "gabp_solve", "gabp_sweep", "generalized_solve", "generalized_sweep", "line_regions",
    "load_matrix_market", "mg_solve", "multigrid", "precompute_lambda", "problem_def", "prolong",
    "relax", "relax_solve", "residual_inf_norm", "restrict", "save_matrix_market",
    "spectral_radius", "v_cycle", "validate_counting",
]
