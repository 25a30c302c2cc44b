"""Distributed primal-dual approximation for throughput maximization on
tree- and line-networks, with a round-accurate simulator and exact oracles."""

from .decomposition import build_balancing, build_ideal, build_root_fixing, validate_decomposition
from .dist_sim import SimConfig, run_distributed, run_overall_height, run_unit
from .generate import GenConfig, generate
from .layering import check_interference, layer_from_decomposition, layer_line_by_length
from .model import (
    LINE,
    TREE,
    Demand,
    DemandInstance,
    Network,
    ProblemInstance,
    Solution,
    check_feasible,
    expand_demand_instances,
)
from .oracle import certify_ratio, exact_optimum, verify_weak_duality
from .pipeline import ALGORITHMS, run_algorithm
from .primal_dual import sequential_tree_solve

__version__ = "0.1.0"
