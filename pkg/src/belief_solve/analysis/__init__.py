"""Convergence checks, smoothing analysis, cost tables and computation trees."""

from .comptree import ComputationTree, build_computation_tree, computation_tree_solve, tree_system
from .conditions import ScalarConditionReport, scalar_condition
from .flops import flop_table, gabp_breakdown, gabp_cold, gabp_frozen, measured_flops, stencil_class
from .lfa import LfaResult, anisotropic_stencil, laplacian_stencil, lfa_smoothing_factor

__all__ = [
    "ComputationTree", "build_computation_tree", "computation_tree_solve", "tree_system",
    "ScalarConditionReport", "scalar_condition",
    "flop_table", "gabp_breakdown", "gabp_cold", "gabp_frozen", "measured_flops", "stencil_class",
    "LfaResult", "anisotropic_stencil", "laplacian_stencil", "lfa_smoothing_factor",
]
