"""Outer objective: score one UGV parameter vector end to end.

Decoding a unit vector fixes the ground route; the flight solver then
covers whatever targets the drive misses.  The mission objective is the
absolute gap between ground-mission minutes and flight-mission minutes
(recharge service included).  Infeasible vectors get a penalty fitness of
horizon minutes plus 100 per uncovered target, so any feasible solution
beats every infeasible one.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from threading import Lock

from .scenario import Scenario
from .ugv import UgvRoute, build_ugv_route, decode_params
from .vrp import (InnerBudget, RoutingGraph, UavPlan, build_routing_graph,
                  check_feasible, guided_local_search)


@dataclass(frozen=True)
class OuterEval:
    """Scalar summary of one vector evaluation (cheap to ship between
    processes)."""
    vector: tuple[float, ...]
    feasible: bool
    fitness_min: float
    objective_min: float | None
    ugv_time_min: float
    ugv_energy_mj: float
    ugv_targets: int
    uav_time_min: float
    uav_energy_kj: float
    uav_targets: int
    recharges_on_stops: int
    recharges_at_depots: int
    uncovered: int
    violations: tuple[str, ...]


def outer_objective(ugv_total_min: float, uav_total_min: float) -> float:
    """Coordination gap between the two missions, in minutes."""
    if ugv_total_min < 0 or uav_total_min < 0:
        raise ValueError("mission times must be non-negative")
    return abs(ugv_total_min - uav_total_min)


def evaluate_vector(scenario: Scenario, vector, inner: InnerBudget,
                    lam: float | None = None) -> OuterEval:
    """Full decode -> drive -> flight pipeline for one unit vector."""
    ev, _, _, _ = evaluate_vector_full(scenario, vector, inner, lam)
    return ev


def evaluate_vector_full(scenario: Scenario, vector, inner: InnerBudget,
                         lam: float | None = None
                         ) -> tuple[OuterEval, UgvRoute, RoutingGraph, UavPlan]:
    """Like evaluate_vector but keeps the route, graph and plan."""
    params = decode_params(vector, n_depots=len(scenario.depots))
    route = build_ugv_route(scenario, params)
    graph = build_routing_graph(scenario, route)
    plan = guided_local_search(graph, budget=inner, lam=lam)

    violations = [str(v) for v in check_feasible(graph, plan)]
    if route.energy > scenario.ugv.fuel_capacity:
        violations.append(
            f"ugv.energy: drive needs {route.energy / 1e6:.2f} MJ of "
            f"{scenario.ugv.fuel_capacity / 1e6:.2f} MJ available")
    if route.total_time > scenario.horizon:
        violations.append(
            f"ugv.horizon: drive takes {route.total_time:.0f} s of "
            f"{scenario.horizon:.0f} s available")
    visited = set(plan.seq)
    uncovered = sum(1 for v in range(graph.d_count, graph.n_vertices)
                    if v not in visited)
    feasible = not violations

    ugv_time_min = route.total_time / 60.0
    if plan.seq:
        uav_time_min = (plan.time_at[-1] - plan.time_at[0]) / 60.0
    else:
        uav_time_min = 0.0
    uav_targets = sum(1 for v in plan.seq if v >= graph.d_count)
    stops = sum(1 for v in plan.seq[1:-1]
                if graph.kinds[v] in ("stop1", "stop2"))
    depots = sum(1 for v in plan.seq[1:-1]
                 if graph.kinds[v] in ("depot", "start"))
    if feasible:
        objective = outer_objective(ugv_time_min, uav_time_min)
        fitness = objective
    else:
        objective = None
        fitness = scenario.horizon / 60.0 + 100.0 * uncovered
    ev = OuterEval(vector=tuple(float(x) for x in vector),
                   feasible=feasible, fitness_min=fitness,
                   objective_min=objective,
                   ugv_time_min=ugv_time_min,
                   ugv_energy_mj=route.energy / 1e6,
                   ugv_targets=len(route.covered),
                   uav_time_min=uav_time_min,
                   uav_energy_kj=graph.power * plan.cost / 1e3,
                   uav_targets=uav_targets,
                   recharges_on_stops=stops,
                   recharges_at_depots=depots,
                   uncovered=uncovered,
                   violations=tuple(violations))
    return ev, route, graph, plan


_worker_state: dict = {}


def _init_worker(scenario, inner, lam):
    _worker_state["args"] = (scenario, inner, lam)


def _eval_task(vector) -> OuterEval:
    scenario, inner, lam = _worker_state["args"]
    return evaluate_vector(scenario, vector, inner, lam)


class EvalPool:
    """Order-preserving evaluator with optional worker processes.

    Evaluations are pure functions of (scenario, vector, budget), so
    farming them out never changes results, only wall time.  The
    evaluation counter is thread-safe; callers may share one pool.
    """

    def __init__(self, scenario: Scenario, inner: InnerBudget,
                 workers: int = 1, lam: float | None = None):
        self.scenario = scenario
        self.inner = inner
        self.lam = lam
        self.workers = max(1, workers)
        self.count = 0
        self._lock = Lock()
        self._exec = None
        if self.workers > 1:
            self._exec = ProcessPoolExecutor(
                max_workers=self.workers,
                initializer=_init_worker,
                initargs=(scenario, inner, lam))

    def evaluate(self, vectors) -> list[OuterEval]:
        vectors = [tuple(float(x) for x in v) for v in vectors]
        if not vectors:
            return []
        if self._exec is None:
            out = [evaluate_vector(self.scenario, v, self.inner, self.lam)
                   for v in vectors]
        else:
            chunk = max(1, len(vectors) // (self.workers * 2))
            out = list(self._exec.map(_eval_task, vectors, chunksize=chunk))
        with self._lock:
            self.count += len(out)
        return out

    def close(self) -> None:
        if self._exec is not None:
            self._exec.shutdown()
            self._exec = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def cpu_workers() -> int:
    """Usable worker count on this host."""
    return os.cpu_count() or 1
