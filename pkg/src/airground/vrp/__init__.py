"""Single-UAV routing with fuel limits, visit windows and dropped visits."""

from .model import (RoutingGraph, UavMetrics, UavPlan, Violation,
                    build_routing_graph, check_feasible, edge_energy,
                    evaluate_plan, evaluate_seq, make_plan, plan_to_csv,
                    recharge_time, uav_power)
from .search import (OPERATORS, InnerBudget, construct_initial,
                     default_lambda, guided_local_search, neighborhood)

__all__ = [
    "RoutingGraph", "UavMetrics", "UavPlan", "Violation",
    "build_routing_graph", "check_feasible", "edge_energy",
    "evaluate_plan", "evaluate_seq", "make_plan", "plan_to_csv",
    "recharge_time", "uav_power",
    "OPERATORS", "InnerBudget", "construct_initial", "default_lambda",
    "guided_local_search", "neighborhood",
]
