"""Optimal transport solvers and benchmark harness.

Exact solvers: network simplex, Kuhn-Munkres.  Approximate solvers: batched
KM, auction (plain and eps-scaled), log-domain Sinkhorn and Greenkhorn.
"""

from .auction import solve_auction, solve_auction_scaled
from .core import (Flow, OTInstance, SolveResult, objective, residue,
                   validate_instance)
from .datasets import (PointCloudDistribution, QuantizationPolicy,
                       build_instance, color_image_to_points,
                       gen_circle_square, image_to_distribution)
from .hungarian import quantize_costs, solve_batched_km, solve_km
from .netsimplex import solve_network_simplex
from .scaling import (ScalingConfig, calibrate_eta, greenkhorn, round_flow,
                      sinkhorn)

__all__ = [
    "Flow", "OTInstance", "PointCloudDistribution", "QuantizationPolicy",
    "ScalingConfig", "SolveResult", "build_instance", "calibrate_eta",
    "color_image_to_points", "gen_circle_square", "greenkhorn",
    "image_to_distribution", "objective", "quantize_costs", "residue",
    "round_flow", "sinkhorn", "solve_auction", "solve_auction_scaled",
    "solve_batched_km", "solve_km", "solve_network_simplex",
    "validate_instance",
]
