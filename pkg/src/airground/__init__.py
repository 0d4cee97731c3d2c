"""Cooperative route optimization: one recharging UAV, one slow UGV.

The ground vehicle drives a depot -> stop -> stop -> depot loop and
covers targets near the road; the aerial vehicle flies sorties over the
rest, returning to stops or depots to recharge.  Outer optimizers (GA,
Nelder-Mead, or an agent-team combination) tune the ground plan so both
vehicles finish as close together as possible.
"""

from .ateams import ATeamsConfig, AteamsResult, run_ateams
from .evaluate import EvalPool, OuterEval, evaluate_vector, outer_objective
from .ga import GaConfig, run_ga
from .nelder_mead import NmConfig, nm_optimize
from .scenario import (Scenario, ScenarioError, load_bundled_scenario,
                       load_scenario, scenario_from_json)
from .ugv import UgvParams, build_ugv_route, decode_params, encode_params
from .vrp import (InnerBudget, build_routing_graph, check_feasible,
                  guided_local_search)

__version__ = "0.1.0"

__all__ = [
    "ATeamsConfig", "AteamsResult", "run_ateams",
    "EvalPool", "OuterEval", "evaluate_vector", "outer_objective",
    "GaConfig", "run_ga", "NmConfig", "nm_optimize",
    "Scenario", "ScenarioError", "load_bundled_scenario", "load_scenario",
    "scenario_from_json",
    "UgvParams", "build_ugv_route", "decode_params", "encode_params",
    "InnerBudget", "build_routing_graph", "check_feasible",
    "guided_local_search",
    "__version__",
]
